"""Directional forecast metrics: hit ratio and threshold-conditional accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRecords


@dataclass(frozen=True)
class PredictionRecord:
    asset: str
    month: object
    predicted: float
    realized: float


@dataclass(frozen=True)
class AccuracyRow:
    theta: float
    n_total: int
    n_correct: int
    accuracy: float   # NaN when n_total == 0


def _arrays(records):
    pred = np.array([r.predicted for r in records], dtype=np.float64)
    real = np.array([r.realized for r in records], dtype=np.float64)
    return pred, real


def hit_ratio(records):
    """Share of records whose predicted and realized returns share a strict sign."""
    if len(records) == 0:
        raise EmptyRecords("hit ratio of an empty record set")
    pred, real = _arrays(records)
    return float(np.mean(np.sign(pred) * np.sign(real) > 0))


def hit_ratios_by_asset(records):
    """``{asset: hit ratio}`` in first-seen asset order."""
    groups = {}
    for r in records:
        groups.setdefault(r.asset, []).append(r)
    return {asset: hit_ratio(rs) for asset, rs in groups.items()}


def hit_ratio_summary(ratios):
    """Mean and population standard deviation across assets."""
    values = np.asarray(list(ratios.values()) if isinstance(ratios, dict) else ratios,
                        dtype=np.float64)
    if values.size == 0:
        raise EmptyRecords("no hit ratios to summarize")
    return float(values.mean()), float(values.std())


def format_summary(mean, sd):
    return f"{mean:.3f}, {sd:.3f}"


def threshold_accuracy(records, thetas):
    """Accuracy of the forecasts with ``predicted >= theta``, per theta.

    A forecast counts as correct when the realized return is strictly
    positive.
    """
    thetas = [float(t) for t in thetas]
    if any(b < a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta grid must be sorted ascending")
    pred, real = _arrays(records)
    rows = []
    for theta in thetas:
        picked = pred >= theta
        n_total = int(picked.sum())
        n_correct = int((picked & (real > 0)).sum())
        acc = n_correct / n_total if n_total else math.nan
        rows.append(AccuracyRow(theta, n_total, n_correct, acc))
    return rows


def _num(x):
    return "" if isinstance(x, float) and math.isnan(x) else repr(x)


def accuracy_to_csv(rows):
    lines = ["theta,n_correct,n_total,accuracy"]
    lines += [f"{r.theta!r},{r.n_correct},{r.n_total},{_num(r.accuracy)}" for r in rows]
    return "\n".join(lines) + "\n"


def hit_ratios_to_csv(ratios, label="model"):
    mean, sd = hit_ratio_summary(ratios)
    lines = ["asset,hit_ratio"]
    lines += [f"{a},{v!r}" for a, v in ratios.items()]
    lines.append(f"{label}:mean,{mean!r}")
    lines.append(f"{label}:sd,{sd!r}")
    return "\n".join(lines) + "\n"
