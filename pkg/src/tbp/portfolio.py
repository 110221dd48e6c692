"""Threshold-based portfolios and their monthly-rebalanced backtest.

Each month the assets whose one-month-ahead forecast clears the threshold
are held at equal absolute weight ``1/P`` for the following month. Months
with no qualifying asset sit in cash at zero return.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MisalignedPredictions, MissingReturn, ReturnBelowMinusOne


class TbpMode(str, enum.Enum):
    LONG = "long"
    SHORT = "short"
    LONG_SHORT = "long-short"


@dataclass(frozen=True)
class TbpConfig:
    """Selection rule. ``theta_plus = -inf`` is the hold-everything sentinel."""

    mode: TbpMode = TbpMode.LONG
    theta_plus: float = 0.0
    theta_minus: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", TbpMode(self.mode))
        tp, tm = float(self.theta_plus), float(self.theta_minus)
        if math.isnan(tp) or math.isnan(tm) or tm < 0 or math.isinf(tm):
            raise ValueError("theta_minus must be finite and non-negative")
        if tp < 0 and tp != -math.inf or tp == math.inf:
            raise ValueError("theta_plus must be finite and non-negative (or -inf)")
        object.__setattr__(self, "theta_plus", tp)
        object.__setattr__(self, "theta_minus", tm)

    @classmethod
    def everything(cls):
        return cls(TbpMode.LONG, -math.inf, 0.0)


@dataclass
class PortfolioSnapshot:
    month: object
    members: list          # (asset, signed weight)
    cash_weight: float

    def weights(self):
        return dict(self.members)


@dataclass
class BacktestResult:
    months: list
    snapshots: list
    returns: np.ndarray
    wealth: np.ndarray
    stats: dict = field(default_factory=dict)

    def to_csv(self):
        lines = ["month,members,cash_weight,return,wealth"]
        for snap, r, w in zip(self.snapshots, self.returns, self.wealth):
            members = ";".join(f"{a}:{wt!r}" for a, wt in snap.members)
            lines.append(f"{snap.month},{members},{snap.cash_weight!r},{float(r)!r},{float(w)!r}")
        return "\n".join(lines) + "\n"


def select_tbp(predictions, config):
    """Position sign per asset: +1 long, -1 short, 0 out."""
    pred = np.asarray(predictions, dtype=np.float64)
    signs = np.zeros(pred.shape, dtype=np.int8)
    if config.mode in (TbpMode.LONG, TbpMode.LONG_SHORT):
        signs[pred >= config.theta_plus] = 1
    if config.mode in (TbpMode.SHORT, TbpMode.LONG_SHORT):
        signs[(pred < -config.theta_minus) & (signs == 0)] = -1
    return signs


def assign_weights(month, assets, signs):
    """Equal absolute weights over the selected assets."""
    picked = [(a, int(s)) for a, s in zip(assets, signs) if s != 0]
    if not picked:
        return PortfolioSnapshot(month, [], 1.0)
    w = 1.0 / len(picked)
    return PortfolioSnapshot(month, [(a, s * w) for a, s in picked], 0.0)


def portfolio_return(snapshot, realized):
    """Weighted realized return; ``realized`` maps asset -> return."""
    total = 0.0
    for asset, w in snapshot.members:
        if asset not in realized or not math.isfinite(realized[asset]):
            raise MissingReturn(asset)
        total += w * realized[asset]
    return total


def cumulative_return(returns):
    """``prod(1 + r_i)`` as a left fold from 1.0."""
    R = 1.0
    for r in returns:
        if r < -1.0:
            raise ReturnBelowMinusOne(f"return {r!r} below -100%")
        R *= 1.0 + r
    return R


def wealth_path(returns, initial=1.0):
    W = initial
    out = []
    for r in returns:
        if r < -1.0:
            raise ReturnBelowMinusOne(f"return {r!r} below -100%")
        W *= 1.0 + r
        out.append(W)
    return np.array(out)


def _population_sd(x):
    if x.size == 0:
        return math.nan
    if np.all(x == x[0]):
        return 0.0
    return float(x.std())


def performance_stats(result):
    """Mean, population SD, mean/SD and average member count."""
    r = np.asarray(result.returns, dtype=np.float64)
    mean = float(r.mean()) if r.size else math.nan
    sd = _population_sd(r)
    ratio = mean / sd if sd and math.isfinite(sd) else math.nan
    members = [len(s.members) for s in result.snapshots]
    avg = float(np.mean(members)) if members else math.nan
    return {"mean": mean, "sd": sd, "mean_sd": ratio, "average_assets": avg}


def _finish(months, snapshots, returns):
    returns = np.array(returns, dtype=np.float64)
    result = BacktestResult(list(months), snapshots, returns, wealth_path(returns))
    result.stats = performance_stats(result)
    return result


def _check(months, assets, predictions, realized):
    if predictions.shape != realized.shape or predictions.shape != (len(months), len(assets)):
        raise MisalignedPredictions(
            f"predictions {predictions.shape}, realized {realized.shape}, "
            f"expected ({len(months)}, {len(assets)})")
    if not np.all(np.isfinite(predictions)):
        raise MisalignedPredictions("non-finite prediction")


def backtest(months, assets, predictions, realized, config):
    """Rebalance monthly on the forecasts made at each month.

    ``predictions[t, a]`` is the forecast made at ``months[t]`` for the next
    month and ``realized[t, a]`` the return actually earned over it.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    realized = np.asarray(realized, dtype=np.float64)
    _check(months, assets, predictions, realized)
    snapshots, returns = [], []
    for t, month in enumerate(months):
        snap = assign_weights(month, assets, select_tbp(predictions[t], config))
        snapshots.append(snap)
        returns.append(portfolio_return(snap, dict(zip(assets, realized[t]))))
    return _finish(months, snapshots, returns)


def ewp_backtest(months, assets, realized):
    """Equally weighted portfolio of the whole universe."""
    realized = np.asarray(realized, dtype=np.float64)
    ones = np.ones_like(realized)
    return backtest(months, assets, ones, realized, TbpConfig.everything())


def asset_backtest(months, assets, realized, asset):
    """Buy-and-hold path of a single asset (weight 1 every month)."""
    k = list(assets).index(asset)
    realized = np.asarray(realized, dtype=np.float64)
    snapshots = [PortfolioSnapshot(m, [(asset, 1.0)], 0.0) for m in months]
    returns = [portfolio_return(s, {asset: realized[t, k]}) for t, s in enumerate(snapshots)]
    return _finish(months, snapshots, returns)


STATS_COLUMNS = ("portfolio", "threshold", "mean", "sd", "mean_sd", "average_assets")


def stats_to_csv(rows):
    """``rows`` are ``(label, threshold or None, stats dict)`` triples."""
    def num(x):
        return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))
    lines = [",".join(STATS_COLUMNS)]
    for label, theta, s in rows:
        lines.append(",".join([label, num(theta), num(s["mean"]), num(s["sd"]),
                               num(s["mean_sd"]), num(s["average_assets"])]))
    return "\n".join(lines) + "\n"
