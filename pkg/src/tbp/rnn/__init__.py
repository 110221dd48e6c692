"""Recurrent predictors written directly in numpy."""

from .cells import (
    GATES, CellParams, CellState, CellType, backward_sequence, forward_sequence,
    gru_step, initial_state, lstm_step, sigmoid, srnn_step,
)
from .checkpoint import (
    SCHEMA_VERSION, dumps_checkpoint, load_checkpoint, loads_checkpoint, save_checkpoint,
)
from .model import (
    NetworkConfig, RnnModel, backward, dropout_mask, forward, init_model, loss,
    param_count, predict,
)
from .optim import Adam, adam_step
from .training import GridResult, TrainHistory, default_grid, grid_search, mean_loss, train

__all__ = [
    "GATES", "SCHEMA_VERSION", "Adam", "CellParams", "CellState", "CellType", "GridResult",
    "NetworkConfig", "RnnModel", "TrainHistory", "adam_step", "backward", "backward_sequence",
    "default_grid", "dropout_mask", "dumps_checkpoint", "forward", "forward_sequence",
    "grid_search", "gru_step", "init_model", "initial_state", "load_checkpoint",
    "loads_checkpoint", "loss", "lstm_step", "mean_loss", "param_count", "predict",
    "save_checkpoint", "sigmoid", "srnn_step", "train",
]
