"""Glue between a trained model and a feature panel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import PredictionRecord
from .market_data import window_anchors, window_tensor
from .rnn.model import predict


@dataclass
class Forecasts:
    """Forecasts at consecutive anchor months.

    ``predictions[t, a]`` is made at ``months[t]`` for the next month;
    ``realized[t, a]`` is what that month returned (NaN if not yet known).
    """

    assets: list
    anchors: list
    months: list
    predictions: np.ndarray
    realized: np.ndarray

    def records(self):
        out = []
        for t, month in enumerate(self.months):
            for a, asset in enumerate(self.assets):
                if np.isfinite(self.realized[t, a]):
                    out.append(PredictionRecord(asset, month, float(self.predictions[t, a]),
                                                float(self.realized[t, a])))
        return out

    def realized_only(self):
        """Restrict to anchors whose next-month return is known."""
        keep = [t for t in range(len(self.anchors)) if np.all(np.isfinite(self.realized[t]))]
        return Forecasts(self.assets, [self.anchors[t] for t in keep],
                         [self.months[t] for t in keep], self.predictions[keep],
                         self.realized[keep])


def forecast_panel(model, panel, months, require_target=True):
    """Inference-mode forecasts for every asset at each usable anchor in ``months``."""
    seq = model.config.seq_len
    anchors = window_anchors(panel, months, seq, require_target=require_target)
    X = window_tensor(panel, anchors, seq)
    flat = X.reshape((-1,) + X.shape[2:])
    preds = predict(model, flat).reshape(len(anchors), panel.n_assets)
    realized = panel.targets[:, anchors].T if anchors else np.zeros((0, panel.n_assets))
    return Forecasts(list(panel.assets), anchors, [panel.months[t] for t in anchors],
                     preds, np.array(realized, dtype=np.float64))
