"""Many-to-one recurrent regressor.

Stacked recurrent layers feed a linear head through an (optional) inverted
dropout layer applied to the last layer's final hidden vector::

    r_hat = w_out . dropout(h_T) + b_out
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import LengthMismatch, ShapeMismatch, StaleCache
from ..seeding import rng_for
from .cells import GATES, CellParams, CellType, backward_sequence, forward_sequence

N_FEATURES = 5


@dataclass(frozen=True)
class NetworkConfig:
    cell: CellType = CellType.LSTM
    layers: int = 1
    hidden: int = 36
    dropout_rate: float = 0.5
    seq_len: int = 36
    input_dim: int = N_FEATURES
    lr: float = 0.001
    batch: int = 20
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cell", CellType(self.cell))
        if self.layers < 1 or self.hidden < 1 or self.input_dim < 1 or self.seq_len < 1:
            raise ValueError("layers, hidden, input_dim and seq_len must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.batch < 1 or self.max_epochs < 0 or self.patience < 0:
            raise ValueError("batch must be positive; max_epochs and patience non-negative")
        if not self.lr > 0:
            raise ValueError("lr must be positive")

    def to_dict(self):
        out = asdict(self)
        out["cell"] = self.cell.value
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def param_count(cell, n, d):
    """Recurrent parameters of one layer, excluding the head."""
    return len(GATES[CellType(cell)]) * (n * d + n * n + n)


@dataclass
class RnnModel:
    config: NetworkConfig
    cells: list
    w_out: np.ndarray   # (1, n)
    b_out: np.ndarray   # (1,)
    version: int = 0

    def parameters(self):
        """Flat ``name -> array`` view of every trainable tensor."""
        out = {}
        for k, cell in enumerate(self.cells):
            for name, tensor in cell.tensors.items():
                out[f"layers.{k}.{name}"] = tensor
        out["head.w_out"] = self.w_out
        out["head.b_out"] = self.b_out
        return out

    def n_parameters(self):
        return sum(p.size for p in self.parameters().values())

    def copy(self):
        return copy.deepcopy(self)

    def load_parameters(self, values):
        """Copy ``values`` (same names and shapes) into this model in place."""
        params = self.parameters()
        if set(values) != set(params):
            raise ShapeMismatch("parameter names differ")
        for name, target in params.items():
            if values[name].shape != target.shape:
                raise ShapeMismatch(f"{name}: {values[name].shape} != {target.shape}")
            target[...] = values[name]
        self.version += 1


def _uniform(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_model(config):
    """Glorot-uniform weights, zero biases, forget-gate bias of one."""
    rng = rng_for(config.seed, "init")
    cells = []
    d = config.input_dim
    n = config.hidden
    for _ in range(config.layers):
        cell = CellParams.zeros(config.cell, n, d)
        for g in GATES[config.cell]:
            w = "W_" + g if g else "W"
            u = "U_" + g if g else "U"
            cell.tensors[w][...] = _uniform(rng, n, d)
            cell.tensors[u][...] = _uniform(rng, n, n)
        if config.cell is CellType.LSTM:
            cell.tensors["b_f"][...] = 1.0
        cells.append(cell)
        d = n
    return RnnModel(config, cells, _uniform(rng, 1, n), np.zeros(1))


def dropout_mask(rng, rate, shape):
    """Inverted-dropout mask: kept units scaled by ``1 / (1 - rate)``."""
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


def forward(model, X, train=False, rng=None, mask=None):
    """Predict one scalar per window.

    ``X`` is (B, T, d) or a single (T, d) window. In train mode a dropout
    mask is drawn from ``rng`` unless ``mask`` (B, n) is given. Returns
    ``(predictions (B,), cache)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    cfg = model.config
    if X.ndim != 3 or X.shape[2] != cfg.input_dim:
        raise ShapeMismatch(f"expected (batch, steps, {cfg.input_dim}) inputs, got {X.shape}")
    layer_caches = []
    out = X
    for cell in model.cells:
        out, cache = forward_sequence(cell, out)
        layer_caches.append(cache)
    h_last = out[:, -1]
    if train:
        if mask is None:
            if rng is None:
                raise ValueError("train mode needs an rng or an explicit mask")
            mask = dropout_mask(rng, cfg.dropout_rate, h_last.shape)
        elif mask.shape != h_last.shape:
            raise ShapeMismatch(f"mask shape {mask.shape} != {h_last.shape}")
    else:
        mask = np.ones_like(h_last)
    dropped = h_last * mask
    preds = dropped @ model.w_out[0] + model.b_out[0]
    cache = {"layers": layer_caches, "dropped": dropped, "mask": mask,
             "preds": preds, "steps": X.shape[1], "version": model.version}
    return preds, cache


def predict(model, X, chunk=4096):
    """Inference-mode predictions, evaluated in chunks."""
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        return np.zeros(0)
    return np.concatenate([forward(model, X[i:i + chunk])[0] for i in range(0, len(X), chunk)])


def loss(preds, targets):
    """Half the summed squared error."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise LengthMismatch(f"{preds.shape} predictions vs {targets.shape} targets")
    r = targets - preds
    with np.errstate(over="ignore"):   # callers treat inf as divergence
        return 0.5 * float(r @ r)


def backward(model, cache, targets):
    """Exact BPTT gradients of ``loss`` for the batch behind ``cache``."""
    if cache["version"] != model.version:
        raise StaleCache("parameters changed since the forward pass")
    targets = np.asarray(targets, dtype=np.float64)
    preds = cache["preds"]
    if preds.shape != targets.shape:
        raise LengthMismatch(f"{preds.shape} predictions vs {targets.shape} targets")
    resid = preds - targets
    grads = {
        "head.w_out": (resid @ cache["dropped"])[None, :],
        "head.b_out": np.array([resid.sum()]),
    }
    B, T = resid.shape[0], cache["steps"]
    dH = np.zeros((B, T, model.config.hidden))
    dH[:, -1] = np.outer(resid, model.w_out[0]) * cache["mask"]
    for k in reversed(range(len(model.cells))):
        cell_grads, dH = backward_sequence(model.cells[k], cache["layers"][k], dH)
        for name, g in cell_grads.items():
            grads[f"layers.{k}.{name}"] = g
    return grads
