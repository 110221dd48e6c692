import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tbp.errors import MisalignedPredictions, MissingReturn, ReturnBelowMinusOne
from tbp.portfolio import (
    PortfolioSnapshot, TbpConfig, TbpMode, asset_backtest, assign_weights, backtest,
    cumulative_return, ewp_backtest, portfolio_return, select_tbp,
    stats_to_csv, wealth_path,
)

ASSETS = ["A", "B", "C"]


def test_select_long_inclusive_threshold():
    pred = np.array([0.01, 0.02, -0.01, 0.005])
    assert select_tbp(pred, TbpConfig("long", 0.01)).tolist() == [1, 1, 0, 0]


def test_select_short_strict():
    pred = np.array([0.01, -0.02, -0.01, -0.005])
    assert select_tbp(pred, TbpConfig("short", 0.0, 0.01)).tolist() == [0, -1, 0, 0]


def test_select_long_short_prefers_long():
    pred = np.array([0.03, -0.02, 0.0])
    # theta_plus 0 with theta_minus 0: 0.0 is long, -0.02 short
    assert select_tbp(pred, TbpConfig("long-short", 0.0, 0.0)).tolist() == [1, -1, 1]


def test_everything_selects_all():
    pred = np.array([-5.0, 0.0, 3.0])
    assert select_tbp(pred, TbpConfig.everything()).tolist() == [1, 1, 1]


def test_config_validation():
    with pytest.raises(ValueError):
        TbpConfig("long", -0.01)
    with pytest.raises(ValueError):
        TbpConfig("long", 0.0, -0.01)
    with pytest.raises(ValueError):
        TbpConfig("long", math.nan)
    with pytest.raises(ValueError):
        TbpConfig("sideways", 0.0)


def test_weights_equal_and_cash():
    snap = assign_weights("m", ASSETS, [1, 0, -1])
    assert snap.members == [("A", 0.5), ("C", -0.5)] and snap.cash_weight == 0.0
    empty = assign_weights("m", ASSETS, [0, 0, 0])
    assert empty.members == [] and empty.cash_weight == 1.0


def test_portfolio_return_examples():
    snap = PortfolioSnapshot("m", [("A", 0.5), ("B", 0.5)], 0.0)
    assert portfolio_return(snap, {"A": 0.04, "B": -0.02}) == pytest.approx(0.01, abs=1e-17)
    assert portfolio_return(PortfolioSnapshot("m", [], 1.0), {}) == 0.0
    with pytest.raises(MissingReturn):
        portfolio_return(snap, {"A": 0.04})
    with pytest.raises(MissingReturn):
        portfolio_return(snap, {"A": 0.04, "B": math.nan})


def test_hand_ledger():
    months = ["2020-01", "2020-02", "2020-03", "2020-04"]
    pred = np.array([[0.02, 0.005, 0.015],
                     [-0.01, 0.03, 0.0],
                     [0.0, 0.0, 0.0],
                     [0.012, 0.011, 0.010]])
    real = np.array([[0.10, 0.50, -0.04],
                     [0.07, -0.05, 0.20],
                     [0.01, 0.02, 0.03],
                     [-0.02, 0.04, 0.09]])
    res = backtest(months, ASSETS, pred, real, TbpConfig("long", 0.01))
    # month 1: A, C -> (0.10 - 0.04)/2; month 2: B -> -0.05; month 3: cash;
    # month 4: A, B, C -> 0.11/3
    expect = [Fraction(3, 100), Fraction(-5, 100), Fraction(0), Fraction(11, 300)]
    np.testing.assert_allclose(res.returns, [float(e) for e in expect], rtol=0, atol=1e-16)
    wealth = Fraction(1)
    for e, w in zip(expect, res.wealth):
        wealth *= 1 + e
        assert w == pytest.approx(float(wealth), rel=1e-15)
    assert [len(s.members) for s in res.snapshots] == [2, 1, 0, 3]
    assert res.snapshots[2].cash_weight == 1.0
    assert res.stats["average_assets"] == 1.5
    lines = res.to_csv().splitlines()
    assert lines[0] == "month,members,cash_weight,return,wealth"
    assert lines[3].startswith("2020-03,,1.0,0.0,")


def test_cumulative_return_examples():
    assert cumulative_return([]) == 1.0
    assert cumulative_return([0.1, -0.1]) == pytest.approx(0.99, rel=1e-15)
    assert cumulative_return([-1.0, 0.5]) == 0.0
    with pytest.raises(ReturnBelowMinusOne):
        cumulative_return([0.1, -1.01])
    with pytest.raises(ReturnBelowMinusOne):
        wealth_path([-2.0])


def test_wealth_path_ends_at_cumulative(rng):
    r = rng.normal(0.01, 0.05, 50)
    assert wealth_path(r)[-1] == cumulative_return(r)
    assert wealth_path(r, 2.0)[-1] == pytest.approx(2.0 * cumulative_return(r), rel=1e-15)


def test_stats_constant_returns():
    res = backtest(["a", "b"], ["A"], np.zeros((2, 1)), np.full((2, 1), 0.01),
                   TbpConfig("long", 0.0))
    assert res.stats["sd"] == 0.0 and math.isnan(res.stats["mean_sd"])
    assert res.stats["mean"] == pytest.approx(0.01)
    text = stats_to_csv([("tbp", 0.0, res.stats), ("ewp", None, res.stats)])
    assert text.splitlines()[2].startswith("ewp,,0.01,0.0,,")


def test_stats_population_sd():
    res = backtest(["a", "b"], ["A"], np.zeros((2, 1)), np.array([[0.0], [0.02]]),
                   TbpConfig("long", 0.0))
    assert res.stats["sd"] == pytest.approx(0.01, abs=1e-17)
    assert res.stats["mean_sd"] == pytest.approx(1.0)


def test_misaligned_inputs():
    with pytest.raises(MisalignedPredictions):
        backtest(["a"], ASSETS, np.zeros((1, 2)), np.zeros((1, 2)), TbpConfig())
    with pytest.raises(MisalignedPredictions):
        backtest(["a"], ASSETS, np.array([[0, math.nan, 0]]), np.zeros((1, 3)), TbpConfig())


def test_ewp_and_single_asset(rng):
    real = rng.normal(0, 0.05, (12, 3))
    months = list(range(12))
    ewp = ewp_backtest(months, ASSETS, real)
    np.testing.assert_allclose(ewp.returns, real.mean(axis=1), rtol=0, atol=1e-16)
    one = asset_backtest(months, ASSETS, real, "B")
    np.testing.assert_array_equal(one.returns, real[:, 1])


def test_huge_threshold_stays_in_cash(rng):
    real = rng.normal(0, 0.05, (10, 3))
    res = backtest(list(range(10)), ASSETS, rng.normal(0, 0.01, (10, 3)), real,
                   TbpConfig("long", 1e6))
    assert np.all(res.wealth == 1.0)


def test_monotone_membership(rng):
    for _ in range(1000):
        pred = rng.normal(0.01, 0.02, 10)
        hi = select_tbp(pred, TbpConfig("long", 0.02)) == 1
        lo = select_tbp(pred, TbpConfig("long", 0.01)) == 1
        assert not np.any(hi & ~lo)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-0.05, 0.05), min_size=1, max_size=8),
       st.lists(st.floats(-0.5, 0.5), min_size=8, max_size=8),
       st.floats(0.0, 0.05), st.floats(0.0, 0.05),
       st.sampled_from(list(TbpMode)))
def test_backtest_matches_brute_force(pred, real, tp, tm, mode):
    k = len(pred)
    assets = [f"S{i}" for i in range(k)]
    res = backtest(["m"], assets, np.array([pred]), np.array([real[:k]]),
                   TbpConfig(mode, tp, tm))
    chosen = []
    for a, p, r in zip(assets, pred, real):
        if mode != TbpMode.SHORT and p >= tp:
            chosen.append((a, 1, r))
        elif mode != TbpMode.LONG and p < -tm:
            chosen.append((a, -1, r))
    expect = sum(s * r for _, s, r in chosen) / len(chosen) if chosen else 0.0
    assert res.returns[0] == pytest.approx(expect, abs=1e-15)
    assert [a for a, _ in res.snapshots[0].members] == [a for a, _, _ in chosen]
    weights = sum(abs(w) for _, w in res.snapshots[0].members) + res.snapshots[0].cash_weight
    assert weights == pytest.approx(1.0)
