"""Mini-batch training with early stopping, and hyperparameter grid search."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import EmptyTrainSet, TrainingDiverged
from ..seeding import derive_seed, rng_for
from .model import NetworkConfig, backward, forward, init_model, loss, predict
from .optim import Adam

log = logging.getLogger(__name__)


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf

    def to_csv(self):
        lines = ["epoch,train_loss,val_loss"]
        for e, tr, va in zip(self.epochs, self.train_loss, self.val_loss):
            lines.append(f"{e},{tr!r},{'' if va is None else repr(va)}")
        return "\n".join(lines) + "\n"


def mean_loss(model, X, y):
    """Per-sample ``0.5 * (r - r_hat)**2`` averaged, inference mode."""
    if len(y) == 0:
        return math.nan
    return loss(predict(model, X), y) / len(y)


def train(model, X, y, X_val=None, y_val=None):
    """Fit ``model`` in place; returns ``(model, history)``.

    Losses in the history are per-sample means of ``0.5 * residual**2``. The
    parameters with the lowest validation loss are restored at the end; with
    no validation data the final parameters are kept.
    """
    cfg = model.config
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyTrainSet("no training samples")
    has_val = X_val is not None and len(y_val) > 0
    opt = Adam(lr=cfg.lr)
    params = model.parameters()
    history = TrainHistory()
    best = {k: v.copy() for k, v in params.items()}
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng_for(cfg.seed, "shuffle", epoch).permutation(len(y))
        drop_rng = rng_for(cfg.seed, "dropout", epoch)
        total = 0.0
        for start in range(0, len(y), cfg.batch):
            idx = order[start:start + cfg.batch]
            preds, cache = forward(model, X[idx], train=True, rng=drop_rng)
            batch_loss = loss(preds, y[idx])
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(f"non-finite loss in epoch {epoch}")
            total += batch_loss
            opt.step(params, backward(model, cache, y[idx]))
            model.version += 1
        train_loss = total / len(y)
        val_loss = mean_loss(model, X_val, y_val) if has_val else None
        history.epochs.append(epoch)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if has_val and not math.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss in epoch {epoch}")
        score = val_loss if has_val else train_loss
        if score < history.best_val_loss:
            history.best_val_loss = score
            history.best_epoch = epoch
            best = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if has_val and stale > cfg.patience:
                break
    if has_val:
        model.load_parameters(best)
    log.debug("trained %s: %d epochs, best %g at %d", cfg.cell.value,
              len(history.epochs), history.best_val_loss, history.best_epoch)
    return model, history


DEFAULT_LAYERS = (1, 2, 3)
DEFAULT_UNITS = (8, 16, 32, 64, 128)
DEFAULT_DROPOUT = (False, True)


def default_grid(base, layers=DEFAULT_LAYERS, units=DEFAULT_UNITS, dropout=DEFAULT_DROPOUT,
                 rate=0.5):
    """Every (layers, units, dropout on/off) combination over ``base``."""
    return [replace(base, layers=l, hidden=u, dropout_rate=rate if on else 0.0)
            for l, u, on in itertools.product(layers, units, dropout)]


@dataclass
class GridResult:
    best: NetworkConfig
    best_index: int
    configs: list
    val_losses: list
    histories: list
    models: list


def _config_tag(cfg):
    return f"{cfg.cell.value}/{cfg.layers}/{cfg.hidden}/{cfg.dropout_rate!r}"


def grid_search(grid, X, y, X_val, y_val, seed=0):
    """Train every config; the lowest validation loss wins.

    Each config's seed is derived from ``seed`` and the config itself, so
    duplicates train identically. Exact ties prefer fewer layers, then fewer
    units, then dropout on, then grid order.
    """
    if not grid:
        raise ValueError("empty grid")
    configs, losses, histories, models = [], [], [], []
    for cfg in grid:
        cfg = replace(cfg, seed=derive_seed(seed, "grid", _config_tag(cfg)))
        model, hist = train(init_model(cfg), X, y, X_val, y_val)
        score = mean_loss(model, X_val, y_val) if len(y_val) else hist.train_loss[-1]
        configs.append(cfg)
        losses.append(score)
        histories.append(hist)
        models.append(model)
    key = lambda k: (losses[k], configs[k].layers, configs[k].hidden,
                     configs[k].dropout_rate == 0.0, k)
    best = min(range(len(configs)), key=key)
    return GridResult(configs[best], best, configs, losses, histories, models)
