"""TBP frontiers: risk/return per threshold, cubic fit, inverse lookup."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import (
    GridMismatch,
    NonBracketable,
    RankDeficient,
    TargetOutOfRange,
    WindowTooShort,
)
from .forecast import forecast_panel
from .portfolio import TbpConfig, TbpMode, assign_weights, backtest, select_tbp

DEFAULT_WINDOW = 10


def theta_grid(lo=0.0, hi=0.025, step=0.0025):
    """Inclusive arithmetic grid, rounded to kill accumulation error."""
    if step <= 0 or hi < lo:
        raise ValueError("need step > 0 and hi >= lo")
    count = int(round((hi - lo) / step))
    return [round(lo + k * step, 12) for k in range(count + 1)]


DEFAULT_GRID = theta_grid()


@dataclass(frozen=True)
class FrontierPoint:
    theta: float
    risk: float
    ret: float
    window: tuple   # (first month, last month)


@dataclass
class CubicFit:
    """``ret = c0 + c1*x + c2*x**2 + c3*x**3`` with ``x`` the risk."""

    coefficients: np.ndarray
    domain: tuple
    residual_rms: float

    def __call__(self, x):
        c0, c1, c2, c3 = self.coefficients
        return c0 + x * (c1 + x * (c2 + x * c3))


@dataclass
class FrontierModel:
    points: list
    fit: CubicFit | None

    @property
    def thetas(self):
        return [p.theta for p in self.points]

    def axis(self, name):
        return np.array([p.risk if name == "risk" else p.ret for p in self.points])


@dataclass
class LookupResult:
    theta: float
    risk: float
    ret: float


def build_frontier(backtests, window=DEFAULT_WINDOW, end=None):
    """One point per threshold from the trailing ``window`` months.

    ``backtests`` maps theta -> BacktestResult; ``end`` is the exclusive
    month index closing the window (defaults to the full length).
    """
    if window < 2:
        raise WindowTooShort(f"window of {window} months; need at least 2")
    points = []
    for theta in sorted(backtests):
        bt = backtests[theta]
        stop = len(bt.returns) if end is None else end
        start = stop - window
        if start < 0 or stop > len(bt.returns):
            raise WindowTooShort(f"backtest for theta={theta} has {len(bt.returns)} months; "
                                 f"window needs [{start}, {stop})")
        r = np.asarray(bt.returns[start:stop], dtype=np.float64)
        risk = 0.0 if np.all(r == r[0]) else float(r.std())
        points.append(FrontierPoint(float(theta), risk, float(r.mean()),
                                    (bt.months[start], bt.months[stop - 1])))
    return points


def solve_dense(A, b):
    """Gaussian elimination with partial pivoting for a small dense system."""
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = len(b)
    scale = np.max(np.abs(A)) or 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= 1e-13 * scale:
            raise RankDeficient("singular normal equations")
        if p != k:
            A[[k, p]] = A[[p, k]]
            b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            A[i, k:] -= f * A[k, k:]
            b[i] -= f * b[k]
    x = np.zeros(n)
    for k in reversed(range(n)):
        x[k] = (b[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x


def fit_cubic_xy(x, y):
    """Least-squares cubic through ``(x, y)`` via normal equations.

    The regression runs on centred, scaled abscissae; coefficients are
    mapped back to raw ``x`` afterwards.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(x)) < 4:
        raise RankDeficient(f"{len(np.unique(x))} distinct risk values; a cubic needs 4")
    centre = 0.5 * (x.max() + x.min())
    half = 0.5 * (x.max() - x.min())
    u = (x - centre) / half
    V = np.vander(u, 4, increasing=True)
    a = solve_dense(V.T @ V, V.T @ y)
    resid = y - V @ a
    c = np.zeros(4)
    for k in range(4):
        for j in range(k + 1):
            c[j] += a[k] * comb(k, j) * (-centre) ** (k - j) / half ** k
    return CubicFit(c, (float(x.min()), float(x.max())), float(np.sqrt(np.mean(resid ** 2))))


def fit_cubic(points):
    return fit_cubic_xy([p.risk for p in points], [p.ret for p in points])


def frontier_model(points):
    """Sort by theta and attach a cubic when at least 4 distinct risks exist."""
    points = sorted(points, key=lambda p: p.theta)
    try:
        fit = fit_cubic(points)
    except RankDeficient:
        fit = None
    return FrontierModel(points, fit)


def lookup_theta(model, target, axis="risk"):
    """Interpolate the threshold that reaches ``target`` on ``axis``.

    The grid segment(s) bracketing the target give theta by linear
    interpolation; the achieved (risk, return) comes from the cubic at the
    interpolated risk, or from the interpolated points when no cubic exists.
    """
    if axis not in ("risk", "return"):
        raise ValueError("axis must be 'risk' or 'return'")
    pts = model.points
    v = model.axis(axis)
    if not pts:
        raise ValueError("empty frontier")
    if not v.min() <= target <= v.max():
        nearest = pts[int(np.argmin(np.abs(v - target)))]
        raise TargetOutOfRange(target, axis, nearest)
    hits = []   # (theta, risk, ret)
    for k, p in enumerate(pts):
        if v[k] == target:
            hits.append((p.theta, p.risk, p.ret))
    for k in range(len(pts) - 1):
        lo, hi = v[k], v[k + 1]
        if lo == hi or not min(lo, hi) < target < max(lo, hi):
            continue
        w = (target - lo) / (hi - lo)
        a, b = pts[k], pts[k + 1]
        hits.append((a.theta + w * (b.theta - a.theta), a.risk + w * (b.risk - a.risk),
                     a.ret + w * (b.ret - a.ret)))
    thetas = sorted({h[0] for h in hits})
    if len(thetas) > 1:
        raise NonBracketable(target, axis, thetas)
    theta, risk, ret = next(h for h in hits if h[0] == thetas[0])
    if model.fit is not None:
        ret = float(model.fit(risk))
    return LookupResult(float(theta), float(risk), float(ret))


def estimation_risk(expected, realized):
    """Mean absolute (return, risk) gap between expected and realized frontiers.

    Accepts one period (a list of points) or several (a list of lists).
    """
    if expected and isinstance(expected[0], FrontierPoint):
        expected, realized = [expected], [realized]
    if len(expected) != len(realized):
        raise GridMismatch("different number of periods")
    d_ret, d_risk = [], []
    for exp, real in zip(expected, realized):
        if [p.theta for p in exp] != [p.theta for p in real]:
            raise GridMismatch("theta grids differ")
        for e, r in zip(exp, real):
            d_ret.append(abs(r.ret - e.ret))
            d_risk.append(abs(r.risk - e.risk))
    if not d_ret:
        raise GridMismatch("no frontier points")
    return float(np.mean(d_ret)), float(np.mean(d_risk))


def frontier_backtests(forecasts, grid, mode=TbpMode.LONG, theta_minus=0.0):
    """theta -> BacktestResult over ``forecasts`` (which must all be realized)."""
    out = {}
    for theta in grid:
        cfg = TbpConfig(mode, theta, theta_minus)
        out[float(theta)] = backtest(forecasts.months, forecasts.assets,
                                     forecasts.predictions, forecasts.realized, cfg)
    return out


@dataclass
class Recommendation:
    decision_month: object
    axis: str
    target: float
    theta: float
    expected_risk: float
    expected_return: float
    mode: str
    theta_minus: float
    members: list
    cash_weight: float
    candidates: list = field(default_factory=list)

    def to_dict(self):
        return {
            "decision_month": str(self.decision_month),
            "axis": self.axis,
            "target": self.target,
            "theta": self.theta,
            "expected_risk": self.expected_risk,
            "expected_return": self.expected_return,
            "mode": self.mode,
            "theta_minus": self.theta_minus,
            "members": [{"asset": a, "weight": w} for a, w in self.members],
            "cash_weight": self.cash_weight,
            "candidates": self.candidates,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def recommend(frontier, decision_month, assets, decision_predictions, target, axis="risk",
              mode=TbpMode.LONG, theta_minus=0.0):
    """Pick theta for ``target`` and the portfolio it implies next month.

    A non-monotone frontier with several matching thresholds resolves to the
    smallest one; the others are listed in ``candidates``.
    """
    candidates = []
    try:
        hit = lookup_theta(frontier, target, axis)
    except NonBracketable as exc:
        candidates = exc.candidates
        theta = min(candidates)
        risk = float(np.interp(theta, frontier.thetas, frontier.axis("risk")))
        ret = (float(frontier.fit(risk)) if frontier.fit is not None
               else float(np.interp(theta, frontier.thetas, frontier.axis("return"))))
        hit = LookupResult(theta, risk, ret)
    cfg = TbpConfig(mode, hit.theta, theta_minus)
    snap = assign_weights(decision_month, assets, select_tbp(decision_predictions, cfg))
    return Recommendation(decision_month, axis, float(target), hit.theta, hit.risk, hit.ret,
                          TbpMode(mode).value, float(theta_minus), snap.members,
                          snap.cash_weight, candidates)


def manage_step(model, panel, target, split, grid=DEFAULT_GRID, window=DEFAULT_WINDOW,
                axis="risk", mode=TbpMode.LONG, theta_minus=0.0):
    """Backtest the grid on the test split, draw the trailing frontier, and
    recommend a portfolio for the month after the panel's last month."""
    history = forecast_panel(model, panel, split.test).realized_only()
    decision = forecast_panel(model, panel, [panel.n_months - 1], require_target=False)
    points = build_frontier(frontier_backtests(history, grid, mode, theta_minus), window)
    frontier = frontier_model(points)
    rec = recommend(frontier, decision.months[0], panel.assets, decision.predictions[0],
                    target, axis, mode, theta_minus)
    return rec, frontier


def frontier_to_csv(points):
    lines = ["theta,risk,return,window_start,window_end"]
    lines += [f"{p.theta!r},{p.risk!r},{p.ret!r},{p.window[0]},{p.window[1]}" for p in points]
    return "\n".join(lines) + "\n"


def fit_to_csv(fit):
    lines = ["c0,c1,c2,c3,residual_rms,domain_lo,domain_hi"]
    if fit is not None:
        vals = list(fit.coefficients) + [fit.residual_rms, *fit.domain]
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
