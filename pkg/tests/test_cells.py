import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import as_lists, gru_scalar, lstm_scalar, srnn_scalar
from tbp.errors import ShapeMismatch
from tbp.rnn import (
    GATES, CellParams, CellState, CellType, forward_sequence, gru_step, initial_state,
    lstm_step, sigmoid, srnn_step,
)
from tbp.rnn.cells import STEP


def random_cell(kind, n, d, seed, scale=0.8):
    rng = np.random.default_rng(seed)
    cell = CellParams.zeros(kind, n, d)
    for t in cell.tensors.values():
        t[...] = rng.normal(0, scale, t.shape)
    return cell


def test_lstm_zero_params_zero_state():
    p = CellParams.zeros("lstm", 3, 2)
    s = lstm_step(p, np.ones(2), initial_state("lstm", 3))
    assert np.all(s.C == 0) and np.all(s.h == 0)


def test_lstm_zero_params_cell_two():
    p = CellParams.zeros("lstm", 3, 2)
    s = lstm_step(p, np.array([0.3, -1.0]), CellState(np.zeros(3), np.full(3, 2.0)))
    np.testing.assert_allclose(s.C, 1.0, rtol=0, atol=0)
    np.testing.assert_allclose(s.h, 0.5 * math.tanh(1.0), rtol=1e-15)
    assert s.h[0] == pytest.approx(0.380797, abs=5e-7)


def test_gru_zero_params_halves_state():
    p = CellParams.zeros("gru", 4, 2)
    v = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_array_equal(gru_step(p, np.ones(2), CellState(v)).h, 0.5 * v)


def test_gru_zero_state_zero_params():
    p = CellParams.zeros("gru", 4, 2)
    assert np.all(gru_step(p, np.ones(2), CellState(np.zeros(4))).h == 0)


def test_srnn_zero_params():
    p = CellParams.zeros("srnn", 4, 2)
    assert np.all(srnn_step(p, np.ones(2), CellState(np.ones(4))).h == 0)


def test_srnn_without_recurrence_ignores_state():
    p = random_cell("srnn", 4, 2, seed=1)
    p.tensors["U"][...] = 0
    x = np.array([0.2, -0.4])
    a = srnn_step(p, x, CellState(np.zeros(4))).h
    b = srnn_step(p, x, CellState(np.full(4, 7.0))).h
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("kind, oracle", [("lstm", lstm_scalar), ("gru", gru_scalar),
                                          ("srnn", srnn_scalar)])
def test_step_matches_scalar_oracle(kind, oracle):
    n, d, T = 3, 2, 5
    p = random_cell(kind, n, d, seed=11)
    xs = np.random.default_rng(12).normal(size=(T, d))
    s = initial_state(kind, n)
    for x in xs:
        s = STEP[CellType(kind)](p, x, s)
    ref = oracle(as_lists(p), xs.tolist())
    ref_h = ref[0] if kind == "lstm" else ref
    np.testing.assert_allclose(s.h, ref_h, rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", list(CellType))
def test_sequence_matches_stepwise(kind):
    n, d, B, T = 5, 3, 4, 7
    p = random_cell(kind, n, d, seed=2)
    X = np.random.default_rng(3).normal(size=(B, T, d))
    H, _ = forward_sequence(p, X)
    s = initial_state(kind, n, (B,))
    for t in range(T):
        s = STEP[kind](p, X[:, t], s)
        np.testing.assert_allclose(H[:, t], s.h, rtol=0, atol=1e-13)


def test_shape_mismatch():
    p = CellParams.zeros("lstm", 3, 2)
    with pytest.raises(ShapeMismatch):
        lstm_step(p, np.ones(4), initial_state("lstm", 3))
    with pytest.raises(ShapeMismatch):
        gru_step(CellParams.zeros("gru", 3, 2), np.ones(2), CellState(np.zeros(5)))
    with pytest.raises(ShapeMismatch):
        forward_sequence(p, np.ones((2, 5, 4)))
    bad = CellParams.zeros("srnn", 3, 2)
    bad.tensors["U"] = np.zeros((2, 2))
    with pytest.raises(ShapeMismatch):
        bad.check()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 5.0))
def test_gate_ranges(seed, scale):
    rng = np.random.default_rng(seed)
    n, d = 4, 3
    lstm = random_cell("lstm", n, d, seed, scale)
    gru = random_cell("gru", n, d, seed + 1, scale)
    x = rng.normal(0, scale, (8, d))
    h = rng.uniform(-1, 1, (8, n))
    for g in ("f", "i", "o"):
        a = sigmoid(x @ lstm.W(g).T + h @ lstm.U(g).T + lstm.b(g))
        assert np.all((a > 0) & (a < 1)) or np.all((a >= 0) & (a <= 1))
    ct = np.tanh(x @ lstm.W("c").T + h @ lstm.U("c").T + lstm.b("c"))
    assert np.all(np.abs(ct) <= 1)
    for g in ("z", "r"):
        a = sigmoid(x @ gru.W(g).T + h @ gru.U(g).T + gru.b(g))
        assert np.all((a >= 0) & (a <= 1))


def test_gate_ranges_open_interval_moderate_inputs():
    rng = np.random.default_rng(5)
    lstm = random_cell("lstm", 6, 5, 5)
    x = rng.normal(size=(50, 5))
    h = rng.uniform(-1, 1, (50, 6))
    for g in ("f", "i", "o"):
        a = sigmoid(x @ lstm.W(g).T + h @ lstm.U(g).T + lstm.b(g))
        assert np.all((a > 0) & (a < 1))
    ct = np.tanh(x @ lstm.W("c").T + h @ lstm.U("c").T + lstm.b("c"))
    assert np.all((ct > -1) & (ct < 1))


def test_sigmoid_extremes_finite():
    z = np.array([-1000.0, -30.0, 0.0, 30.0, 1000.0])
    s = sigmoid(z)
    assert np.all(np.isfinite(s)) and s[2] == 0.5
    np.testing.assert_allclose(s + sigmoid(-z), 1.0, atol=1e-15)


def test_gate_names():
    assert GATES[CellType.LSTM] == ("f", "i", "c", "o")
    assert GATES[CellType.GRU] == ("z", "r", "h")
