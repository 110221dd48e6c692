"""Daily OHLCV ingestion, monthly aggregation and windowed datasets.

Input files follow the Yahoo Finance export layout::

    Date,Open,High,Low,Close,Adj Close,Volume

``Adj Close`` stands in for the close price everywhere; the raw ``Close``
column is read past and ignored.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    DuplicateDate,
    MisalignedCalendars,
    MissingColumn,
    NonPositivePrice,
    TooFewMonths,
    UnparsableRow,
)

REQUIRED_COLUMNS = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")
ATTRIBUTES = ("open", "high", "low", "close", "volume")
CLOSE = ATTRIBUTES.index("close")
PANEL_COLUMNS = ("asset", "month", "f_open", "f_high", "f_low", "f_close",
                 "f_volume", "target")
DEFAULT_WINDOW = 36


class Month(NamedTuple):
    year: int
    month: int

    def __str__(self):
        return f"{self.year:04d}-{self.month:02d}"

    @classmethod
    def parse(cls, text):
        year, month = text.split("-")
        return cls(int(year), int(month))

    def next(self):
        if self.month == 12:
            return Month(self.year + 1, 1)
        return Month(self.year, self.month + 1)


class Aggregation(str, enum.Enum):
    LAST = "last"
    MEAN = "mean"
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class DailyBar:
    date: dt.date
    open: float
    high: float
    low: float
    adj_close: float
    volume: float


@dataclass(frozen=True)
class MonthlyBar:
    month: Month
    open: float
    high: float
    low: float
    close: float
    volume: float
    aggregation: Aggregation

    def values(self):
        return (self.open, self.high, self.low, self.close, self.volume)


@dataclass
class MonthlyFeaturePanel:
    """Percent-change features and next-month targets for an aligned universe.

    ``features`` has shape (assets, months, 5) in ``ATTRIBUTES`` order and
    ``targets`` has shape (assets, months); the final month has no target and
    holds NaN.
    """

    assets: list
    months: list
    features: np.ndarray
    targets: np.ndarray

    @property
    def n_assets(self):
        return len(self.assets)

    @property
    def n_months(self):
        return len(self.months)


@dataclass(frozen=True)
class DatasetSplit:
    """Half-open month-index ranges into a panel."""

    train: range
    validation: range
    test: range

    def as_dict(self):
        return {name: [r.start, r.stop] for name, r in
                (("train", self.train), ("validation", self.validation),
                 ("test", self.test))}


@dataclass(frozen=True)
class WindowedSample:
    inputs: np.ndarray
    target: float
    asset: str
    anchor_month: Month
    anchor: int


def _parse_float(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise UnparsableRow(line, f"{column} value {text!r} is not a number") from None
    if not math.isfinite(value):
        raise UnparsableRow(line, f"{column} value {text!r} is not finite")
    return value


def parse_daily_csv(path):
    """Read one asset's daily bars, sorted by date."""
    path = Path(path)
    bars = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MissingColumn(REQUIRED_COLUMNS[0], path)
        header = [h.strip() for h in header]
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise MissingColumn(column, path)
        idx = {c: header.index(c) for c in REQUIRED_COLUMNS}
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise UnparsableRow(line, f"expected {len(header)} fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[idx["Date"]].strip())
            except ValueError:
                raise UnparsableRow(line, f"bad date {row[idx['Date']]!r}") from None
            prices = {}
            for column in ("Open", "High", "Low", "Adj Close"):
                value = _parse_float(row[idx[column]], line, column)
                if value <= 0:
                    raise NonPositivePrice(line, column, value)
                prices[column] = value
            volume = _parse_float(row[idx["Volume"]], line, "Volume")
            if volume < 0:
                raise UnparsableRow(line, f"negative volume {volume!r}")
            bars.append(DailyBar(date, prices["Open"], prices["High"], prices["Low"],
                                 prices["Adj Close"], volume))
    bars.sort(key=lambda b: b.date)
    for prev, cur in zip(bars, bars[1:]):
        if prev.date == cur.date:
            raise DuplicateDate(cur.date)
    return bars


_REDUCERS = {
    Aggregation.LAST: lambda col: col[-1],
    Aggregation.MEAN: lambda col: math.fsum(col) / len(col),
    Aggregation.MAX: max,
    Aggregation.MIN: min,
}


def aggregate_monthly(bars, method):
    """Collapse daily bars into one bar per calendar month."""
    method = Aggregation(method)
    reduce = _REDUCERS[method]
    out = []
    for month, group in groupby(bars, key=lambda b: Month(b.date.year, b.date.month)):
        group = list(group)
        cols = [[getattr(b, name) for b in group]
                for name in ("open", "high", "low", "adj_close", "volume")]
        out.append(MonthlyBar(month, *(reduce(c) for c in cols), aggregation=method))
    return out


def pct_change(values):
    """Row-wise ``(x_t - x_{t-1}) / x_{t-1}`` along axis 0.

    A zero base (only reachable for volume) yields a change of 0.
    """
    values = np.asarray(values, dtype=np.float64)
    prev, cur = values[:-1], values[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (cur - prev) / prev
    return np.where(prev == 0, 0.0, out)


def build_panel(monthly):
    """Assemble a feature panel from ``{asset: [MonthlyBar, ...]}``.

    Every asset must cover exactly the same months.
    """
    assets = list(monthly)
    if not assets:
        raise TooFewMonths("no assets given")
    reference = [b.month for b in monthly[assets[0]]]
    for asset in assets:
        if [b.month for b in monthly[asset]] != reference:
            raise MisalignedCalendars(asset)
    for prev, cur in zip(reference, reference[1:]):
        if prev.next() != cur:
            raise MisalignedCalendars(assets[0])
    if len(reference) < 2:
        raise TooFewMonths("need at least two months to form percent changes")
    raw = np.array([[b.values() for b in monthly[a]] for a in assets], dtype=np.float64)
    features = np.stack([pct_change(raw[k]) for k in range(len(assets))])
    targets = np.full(features.shape[:2], np.nan)
    targets[:, :-1] = features[:, 1:, CLOSE]
    return MonthlyFeaturePanel(assets, reference[1:], features, targets)


def load_panel(data_dir, method, assets=None):
    """Parse ``<asset>.csv`` files in ``data_dir`` and build the panel.

    Assets are ordered by file stem unless ``assets`` fixes the order.
    """
    data_dir = Path(data_dir)
    if assets is None:
        assets = sorted(p.stem for p in data_dir.glob("*.csv"))
    monthly = {a: aggregate_monthly(parse_daily_csv(data_dir / f"{a}.csv"), method)
               for a in assets}
    return build_panel(monthly)


def split_panel(panel, train_frac=0.7, val_frac_of_train=0.3, window=DEFAULT_WINDOW):
    """Chronological train/validation/test split of the panel's months.

    Test and validation sizes are floored; the remainder goes to train.
    """
    n = panel.n_months if hasattr(panel, "n_months") else int(panel)
    if n < window + 3:
        raise TooFewMonths(f"{n} months; need at least {window + 3}")
    if not (0.0 <= train_frac <= 1.0 and 0.0 <= val_frac_of_train <= 1.0):
        raise ValueError("fractions must lie in [0, 1]")
    # the epsilon absorbs binary representation error, e.g. 0.3 * 100
    n_test = math.floor((1.0 - train_frac) * n + 1e-9)
    n_pre = n - n_test
    n_val = math.floor(val_frac_of_train * n_pre + 1e-9)
    n_train = n_pre - n_val
    return DatasetSplit(range(0, n_train), range(n_train, n_pre), range(n_pre, n))


def window_anchors(panel, months, window=DEFAULT_WINDOW, require_target=True):
    """Anchor indices in ``months`` with full history (and a target)."""
    out = []
    for t in months:
        if t < window - 1 or t >= panel.n_months:
            continue
        if require_target and not np.isfinite(panel.targets[0, t]):
            continue
        out.append(t)
    return out


def make_windows(panel, months, window=DEFAULT_WINDOW):
    """One sample per (anchor month, asset), ordered by anchor then asset."""
    samples = []
    for t in window_anchors(panel, months, window):
        for a, asset in enumerate(panel.assets):
            samples.append(WindowedSample(
                inputs=panel.features[a, t - window + 1:t + 1],
                target=float(panel.targets[a, t]),
                asset=asset,
                anchor_month=panel.months[t],
                anchor=t,
            ))
    return samples


def window_tensor(panel, anchors, window=DEFAULT_WINDOW):
    """Inputs for every asset at each anchor: shape (len(anchors), assets, window, 5)."""
    if not anchors:
        return np.zeros((0, panel.n_assets, window, len(ATTRIBUTES)))
    return np.stack([panel.features[:, t - window + 1:t + 1] for t in anchors])


def stack_samples(samples):
    """``(X, y)`` arrays from a list of samples."""
    if not samples:
        return np.zeros((0, DEFAULT_WINDOW, len(ATTRIBUTES))), np.zeros(0)
    X = np.stack([s.inputs for s in samples])
    y = np.array([s.target for s in samples], dtype=np.float64)
    return X, y


def _stats(block):
    """Population mean/std/min/max per attribute for an (months, 5) block."""
    if block.shape[0] == 0:
        nan = np.full(block.shape[1], np.nan)
        return {"mean": nan, "std": nan, "min": nan, "max": nan}
    return {"mean": block.mean(axis=0), "std": block.std(axis=0),
            "min": block.min(axis=0), "max": block.max(axis=0)}


def summarize_split(panel, split):
    """Per-split, per-asset feature statistics.

    Returns ``{split_name: {asset: {stat: array of 5}}}``.
    """
    out = {}
    for name, months in (("train", split.train), ("validation", split.validation),
                         ("test", split.test)):
        sl = slice(months.start, months.stop)
        out[name] = {a: _stats(panel.features[k, sl]) for k, a in enumerate(panel.assets)}
    return out


def summary_to_csv(summary):
    rows = ["split,asset,statistic," + ",".join(ATTRIBUTES)]
    for split_name, per_asset in summary.items():
        for asset, stats in per_asset.items():
            for stat, values in stats.items():
                rows.append(",".join([split_name, asset, stat] + [repr(float(v)) for v in values]))
    return "\n".join(rows) + "\n"


def panel_to_csv(panel):
    """Serialize the panel; floats use shortest round-trip repr."""
    lines = [",".join(PANEL_COLUMNS)]
    for a, asset in enumerate(panel.assets):
        for t, month in enumerate(panel.months):
            target = panel.targets[a, t]
            cells = [asset, str(month)] + [repr(float(v)) for v in panel.features[a, t]]
            cells.append(repr(float(target)) if np.isfinite(target) else "")
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_panel_csv(path):
    path = Path(path)
    rows = {}
    months = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PANEL_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise MissingColumn(missing[0], path)
        for line, row in enumerate(reader, start=2):
            try:
                month = Month.parse(row["month"])
                feats = [float(row[c]) for c in PANEL_COLUMNS[2:7]]
                target = float(row["target"]) if row["target"] else math.nan
            except ValueError:
                raise UnparsableRow(line, "bad panel row") from None
            rows.setdefault(row["asset"], []).append((month, feats, target))
    assets = list(rows)
    if not assets:
        raise TooFewMonths(f"empty panel file {path}")
    months = [m for m, _, _ in rows[assets[0]]]
    for asset in assets:
        if [m for m, _, _ in rows[asset]] != months:
            raise MisalignedCalendars(asset)
    features = np.array([[f for _, f, _ in rows[a]] for a in assets], dtype=np.float64)
    targets = np.array([[t for _, _, t in rows[a]] for a in assets], dtype=np.float64)
    return MonthlyFeaturePanel(assets, months, features, targets)


def reconstruct_levels(initial, changes):
    """Invert ``pct_change``: levels starting from ``initial``."""
    levels = [float(initial)]
    for c in np.asarray(changes, dtype=np.float64):
        levels.append(levels[-1] * (1.0 + c))
    return np.array(levels)


__all__ = [
    "ATTRIBUTES", "Aggregation", "DailyBar", "DatasetSplit", "Month", "MonthlyBar",
    "MonthlyFeaturePanel", "WindowedSample", "aggregate_monthly", "build_panel",
    "load_panel", "make_windows", "panel_to_csv", "parse_daily_csv", "pct_change",
    "read_panel_csv", "reconstruct_levels", "split_panel", "stack_samples",
    "summarize_split", "window_anchors", "window_tensor", "summary_to_csv",
]
