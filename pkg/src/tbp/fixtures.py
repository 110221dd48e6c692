"""Seeded synthetic universe in the Yahoo daily export layout.

Each asset's daily log return is its month's drift divided across the
month's trading days plus idiosyncratic noise. Monthly drifts follow an
AR(1) around the asset's long-run mean, shared in part with a market
factor, so last month's return carries information about next month's:

    drift[m] = mu + phi * (drift[m-1] - mu) + beta * market[m] + sigma * eps[m]

Trading days are weekdays; prices start at 10-60 and volumes are lognormal
with a kick on large moves. ``Close`` is a dividend-unadjusted copy of
``Adj Close`` so that ingestion has a column to ignore.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .seeding import rng_for

DEFAULT_ASSETS = ("ALPH", "BETA", "CHAR", "DELT", "ECHO", "FOXT", "GOLF", "HOTL", "INDI", "JULI")


def trading_days(start_year=1997, months=240):
    """Weekdays from January of ``start_year`` through ``months`` months."""
    end_year = start_year + (months - 1) // 12
    end_month = (months - 1) % 12 + 1
    last = (dt.date(end_year + (end_month == 12), end_month % 12 + 1, 1)
            - dt.timedelta(days=1))
    day = dt.date(start_year, 1, 1)
    out = []
    while day <= last:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def _month_index(days):
    keys = [(d.year, d.month) for d in days]
    uniq = sorted(set(keys))
    lookup = {k: i for i, k in enumerate(uniq)}
    return np.array([lookup[k] for k in keys]), len(uniq)


def generate_universe(seed=0, assets=DEFAULT_ASSETS, months=240, start_year=1997,
                      phi=0.35, drift_sd=0.04, daily_sd=0.006):
    """``{asset: (dates, open, high, low, close, adj_close, volume)}``."""
    days = trading_days(start_year, months)
    month_of, n_months = _month_index(days)
    per_month = np.bincount(month_of, minlength=n_months)
    market = rng_for(seed, "fixture", "market").normal(0.0, 0.02, n_months)
    out = {}
    for asset in assets:
        rng = rng_for(seed, "fixture", asset)
        mu = rng.uniform(0.002, 0.015)
        beta = rng.uniform(0.5, 1.2)
        drift = np.empty(n_months)
        level = mu
        for m in range(n_months):
            level = mu + phi * (level - mu) + drift_sd * rng.standard_normal()
            drift[m] = level + beta * market[m]
        daily = drift[month_of] / per_month[month_of] + daily_sd * rng.standard_normal(len(days))
        adj = rng.uniform(10, 60) * np.exp(np.cumsum(daily))
        prev = np.concatenate([[adj[0]], adj[:-1]])
        opening = prev * np.exp(0.002 * rng.standard_normal(len(days)))
        spread = np.abs(0.004 * rng.standard_normal((2, len(days))))
        high = np.maximum(opening, adj) * np.exp(spread[0])
        low = np.minimum(opening, adj) * np.exp(-spread[1])
        close = adj * (1.0 + 0.02 * np.linspace(1.0, 0.0, len(days)))
        volume = np.round(np.exp(rng.normal(13.5, 0.3, len(days)) + 20.0 * np.abs(daily)))
        out[asset] = (days, opening, high, low, close, adj, volume)
    return out


def write_universe(out_dir, seed=0, **kwargs):
    """Write ``<asset>.csv`` files; returns the list of paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for asset, (days, o, h, l, c, a, v) in generate_universe(seed, **kwargs).items():
        lines = ["Date,Open,High,Low,Close,Adj Close,Volume"]
        for k, day in enumerate(days):
            lines.append(f"{day.isoformat()},{o[k]:.6f},{h[k]:.6f},{l[k]:.6f},"
                         f"{c[k]:.6f},{a[k]:.6f},{int(v[k])}")
        path = out_dir / f"{asset}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
