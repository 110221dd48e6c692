"""Recurrent cells: Elman S-RNN, LSTM and GRU.

Vectors are row-major batches: ``x`` is (B, d), ``h`` is (B, n), and a gate
pre-activation is ``x @ W.T + h @ U.T + b`` with ``W`` (n, d), ``U`` (n, n)
and ``b`` (n,). The step functions also accept unbatched 1-D vectors.

Sequence routines stack the per-gate matrices so each time step costs one
matmul per operand; gradients are split back into per-gate tensors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


class CellType(str, enum.Enum):
    SRNN = "srnn"
    LSTM = "lstm"
    GRU = "gru"


GATES = {
    CellType.SRNN: ("",),
    CellType.LSTM: ("f", "i", "c", "o"),
    CellType.GRU: ("z", "r", "h"),
}


def _key(prefix, gate):
    return f"{prefix}_{gate}" if gate else prefix


@dataclass
class CellParams:
    """Per-gate ``(W, U, b)`` triples for one recurrent layer."""

    kind: CellType
    n: int
    d: int
    tensors: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, kind, n, d):
        kind = CellType(kind)
        tensors = {}
        for g in GATES[kind]:
            tensors[_key("W", g)] = np.zeros((n, d))
            tensors[_key("U", g)] = np.zeros((n, n))
            tensors[_key("b", g)] = np.zeros(n)
        return cls(kind, n, d, tensors)

    def W(self, gate=""):
        return self.tensors[_key("W", gate)]

    def U(self, gate=""):
        return self.tensors[_key("U", gate)]

    def b(self, gate=""):
        return self.tensors[_key("b", gate)]

    def count(self):
        return sum(t.size for t in self.tensors.values())

    def check(self):
        for g in GATES[self.kind]:
            if (self.W(g).shape != (self.n, self.d) or self.U(g).shape != (self.n, self.n)
                    or self.b(g).shape != (self.n,)):
                raise ShapeMismatch(f"gate {g or 'h'} tensors do not match n={self.n}, d={self.d}")

    def stacked(self, gates=None):
        gates = GATES[self.kind] if gates is None else gates
        W = np.concatenate([self.W(g) for g in gates], axis=0)
        U = np.concatenate([self.U(g) for g in gates], axis=0)
        b = np.concatenate([self.b(g) for g in gates])
        return W, U, b


@dataclass
class CellState:
    h: np.ndarray
    C: np.ndarray | None = None


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_step(params, x, h):
    if x.shape[-1] != params.d:
        raise ShapeMismatch(f"input has {x.shape[-1]} features, cell expects {params.d}")
    if h.shape[-1] != params.n:
        raise ShapeMismatch(f"state has {h.shape[-1]} units, cell expects {params.n}")


def _pre(params, gate, x, h):
    return x @ params.W(gate).T + h @ params.U(gate).T + params.b(gate)


def lstm_step(params, x, state):
    x = np.asarray(x, dtype=np.float64)
    _check_step(params, x, state.h)
    if state.C is None or state.C.shape != state.h.shape:
        raise ShapeMismatch("LSTM state needs a cell vector shaped like h")
    f = sigmoid(_pre(params, "f", x, state.h))
    i = sigmoid(_pre(params, "i", x, state.h))
    c_tilde = np.tanh(_pre(params, "c", x, state.h))
    o = sigmoid(_pre(params, "o", x, state.h))
    C = i * c_tilde + f * state.C
    return CellState(o * np.tanh(C), C)


def gru_step(params, x, state):
    x = np.asarray(x, dtype=np.float64)
    h = state.h
    _check_step(params, x, h)
    z = sigmoid(_pre(params, "z", x, h))
    r = sigmoid(_pre(params, "r", x, h))
    h_tilde = np.tanh(x @ params.W("h").T + (r * h) @ params.U("h").T + params.b("h"))
    return CellState(z * h + (1.0 - z) * h_tilde)


def srnn_step(params, x, state):
    x = np.asarray(x, dtype=np.float64)
    _check_step(params, x, state.h)
    return CellState(np.tanh(_pre(params, "", x, state.h)))


STEP = {CellType.SRNN: srnn_step, CellType.LSTM: lstm_step, CellType.GRU: gru_step}


def initial_state(kind, n, batch_shape=()):
    h = np.zeros(batch_shape + (n,))
    return CellState(h, np.zeros_like(h) if CellType(kind) is CellType.LSTM else None)


# --- whole-sequence forward / backward ------------------------------------
#
# forward_sequence(params, X) -> (H, cache) with X (B, T, d) and H (B, T, n)
# backward_sequence(params, cache, dH) -> (grads, dX) where dH is dL/dH.

def _srnn_forward(p, X):
    B, T, _ = X.shape
    W, U, b = p.W(), p.U(), p.b()
    XP = X @ W.T + b
    H = np.zeros((B, T + 1, p.n))
    for t in range(T):
        H[:, t + 1] = np.tanh(XP[:, t] + H[:, t] @ U.T)
    return H[:, 1:], {"X": X, "H": H}


def _srnn_backward(p, cache, dH):
    X, H = cache["X"], cache["H"]
    B, T, _ = X.shape
    U = p.U()
    dA = np.zeros((B, T, p.n))
    dh = np.zeros((B, p.n))
    for t in reversed(range(T)):
        dh = dh + dH[:, t]
        da = dh * (1.0 - H[:, t + 1] ** 2)
        dA[:, t] = da
        dh = da @ U
    flatA = dA.reshape(B * T, p.n)
    grads = {
        "W": flatA.T @ X.reshape(B * T, -1),
        "U": flatA.T @ H[:, :-1].reshape(B * T, p.n),
        "b": flatA.sum(axis=0),
    }
    return grads, dA @ p.W()


def _lstm_forward(p, X):
    B, T, _ = X.shape
    n = p.n
    W, U, b = p.stacked()
    XP = X @ W.T + b
    H = np.zeros((B, T + 1, n))
    C = np.zeros((B, T + 1, n))
    G = np.zeros((B, T, 4 * n))   # activated gates f, i, c~, o
    TC = np.zeros((B, T, n))
    for t in range(T):
        a = XP[:, t] + H[:, t] @ U.T
        g = G[:, t]
        g[:, :2 * n] = sigmoid(a[:, :2 * n])
        g[:, 2 * n:3 * n] = np.tanh(a[:, 2 * n:3 * n])
        g[:, 3 * n:] = sigmoid(a[:, 3 * n:])
        C[:, t + 1] = g[:, n:2 * n] * g[:, 2 * n:3 * n] + g[:, :n] * C[:, t]
        TC[:, t] = np.tanh(C[:, t + 1])
        H[:, t + 1] = g[:, 3 * n:] * TC[:, t]
    return H[:, 1:], {"X": X, "H": H, "C": C, "G": G, "TC": TC}


def _lstm_backward(p, cache, dH):
    X, H, C, G, TC = (cache[k] for k in ("X", "H", "C", "G", "TC"))
    B, T, _ = X.shape
    n = p.n
    W, U, _ = p.stacked()
    dA = np.zeros((B, T, 4 * n))
    dh = np.zeros((B, n))
    dc = np.zeros((B, n))
    for t in reversed(range(T)):
        f, i, ct, o = (G[:, t, k * n:(k + 1) * n] for k in range(4))
        dh = dh + dH[:, t]
        do = dh * TC[:, t]
        dc = dc + dh * o * (1.0 - TC[:, t] ** 2)
        da = dA[:, t]
        da[:, :n] = dc * C[:, t] * f * (1.0 - f)
        da[:, n:2 * n] = dc * ct * i * (1.0 - i)
        da[:, 2 * n:3 * n] = dc * i * (1.0 - ct ** 2)
        da[:, 3 * n:] = do * o * (1.0 - o)
        dc = dc * f
        dh = da @ U
    flatA = dA.reshape(B * T, 4 * n)
    dW = flatA.T @ X.reshape(B * T, -1)
    dU = flatA.T @ H[:, :-1].reshape(B * T, n)
    db = flatA.sum(axis=0)
    grads = {}
    for k, g in enumerate(GATES[CellType.LSTM]):
        rows = slice(k * n, (k + 1) * n)
        grads[f"W_{g}"], grads[f"U_{g}"], grads[f"b_{g}"] = dW[rows], dU[rows], db[rows]
    return grads, dA @ W


def _gru_forward(p, X):
    B, T, _ = X.shape
    n = p.n
    W, _, b = p.stacked()
    Uzr = np.concatenate([p.U("z"), p.U("r")], axis=0)
    Uh = p.U("h")
    XP = X @ W.T + b
    H = np.zeros((B, T + 1, n))
    Z = np.zeros((B, T, n))
    R = np.zeros((B, T, n))
    HT = np.zeros((B, T, n))
    for t in range(T):
        h = H[:, t]
        zr = sigmoid(XP[:, t, :2 * n] + h @ Uzr.T)
        Z[:, t], R[:, t] = zr[:, :n], zr[:, n:]
        HT[:, t] = np.tanh(XP[:, t, 2 * n:] + (R[:, t] * h) @ Uh.T)
        H[:, t + 1] = Z[:, t] * h + (1.0 - Z[:, t]) * HT[:, t]
    return H[:, 1:], {"X": X, "H": H, "Z": Z, "R": R, "HT": HT}


def _gru_backward(p, cache, dH):
    X, H, Z, R, HT = (cache[k] for k in ("X", "H", "Z", "R", "HT"))
    B, T, _ = X.shape
    n = p.n
    W, _, _ = p.stacked()
    Uz, Ur, Uh = p.U("z"), p.U("r"), p.U("h")
    dA = np.zeros((B, T, 3 * n))
    dUh = np.zeros((n, n))
    dh = np.zeros((B, n))
    for t in reversed(range(T)):
        h, z, r, ht = H[:, t], Z[:, t], R[:, t], HT[:, t]
        dh = dh + dH[:, t]
        da_h = dh * (1.0 - z) * (1.0 - ht ** 2)
        drh = da_h @ Uh
        dUh += da_h.T @ (r * h)
        da = dA[:, t]
        da[:, :n] = dh * (h - ht) * z * (1.0 - z)
        da[:, n:2 * n] = drh * h * r * (1.0 - r)
        da[:, 2 * n:] = da_h
        dh = dh * z + drh * r + da[:, :n] @ Uz + da[:, n:2 * n] @ Ur
    flatA = dA.reshape(B * T, 3 * n)
    dW = flatA.T @ X.reshape(B * T, -1)
    Hprev = H[:, :-1].reshape(B * T, n)
    db = flatA.sum(axis=0)
    grads = {
        "W_z": dW[:n], "W_r": dW[n:2 * n], "W_h": dW[2 * n:],
        "U_z": flatA[:, :n].T @ Hprev, "U_r": flatA[:, n:2 * n].T @ Hprev, "U_h": dUh,
        "b_z": db[:n], "b_r": db[n:2 * n], "b_h": db[2 * n:],
    }
    return grads, dA @ W


_FORWARD = {CellType.SRNN: _srnn_forward, CellType.LSTM: _lstm_forward,
            CellType.GRU: _gru_forward}
_BACKWARD = {CellType.SRNN: _srnn_backward, CellType.LSTM: _lstm_backward,
             CellType.GRU: _gru_backward}


def forward_sequence(params, X):
    if X.ndim != 3 or X.shape[2] != params.d:
        raise ShapeMismatch(f"expected (batch, steps, {params.d}) inputs, got {X.shape}")
    return _FORWARD[params.kind](params, X)


def backward_sequence(params, cache, dH):
    return _BACKWARD[params.kind](params, cache, dH)
