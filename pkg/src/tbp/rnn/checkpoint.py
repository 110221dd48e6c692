"""Checkpoint persistence.

A checkpoint is a UTF-8 JSON document::

    {
      "schema_version": 1,
      "config": {...NetworkConfig fields...},
      "parameters": {"layers.0.W_f": {"shape": [n, d], "data": "v v v ..."}, ...},
      "metadata": {"epochs_run": ..., "best_val_loss": ..., "seed": ..., ...}
    }

Parameter values are space-separated decimals with 17 significant digits,
which round-trip IEEE doubles exactly.
"""

import json
import math
import os
from pathlib import Path

import numpy as np

from ..errors import CorruptFile, SchemaMismatch
from .cells import GATES, CellParams
from .model import NetworkConfig, RnnModel

SCHEMA_VERSION = 1


def _fmt(x):
    return format(float(x), ".17g")


def _encode(array):
    return {"shape": list(array.shape), "data": " ".join(_fmt(v) for v in array.ravel())}


def _decode(entry):
    shape = tuple(entry["shape"])
    values = [float(tok) for tok in entry["data"].split()]
    if len(values) != int(np.prod(shape)):
        raise CorruptFile(f"expected {int(np.prod(shape))} values, found {len(values)}")
    return np.array(values, dtype=np.float64).reshape(shape)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def dumps_checkpoint(model, metadata=None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": model.config.to_dict(),
        "parameters": {k: _encode(v) for k, v in model.parameters().items()},
        "metadata": {k: _clean(v) for k, v in (metadata or {}).items()},
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_checkpoint(model, path, metadata=None):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_checkpoint(model, metadata), encoding="utf-8")
    os.replace(tmp, path)


def loads_checkpoint(text):
    """Rebuild ``(model, metadata)`` from checkpoint text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"not a checkpoint: {exc}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptFile("missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaMismatch(f"schema_version {doc['schema_version']!r}, expected {SCHEMA_VERSION}")
    try:
        config = NetworkConfig.from_dict(doc["config"])
        raw = doc["parameters"]
        cells = []
        d = config.input_dim
        for k in range(config.layers):
            cell = CellParams.zeros(config.cell, config.hidden, d)
            for name in cell.tensors:
                cell.tensors[name] = _decode(raw[f"layers.{k}.{name}"])
            cell.check()
            cells.append(cell)
            d = config.hidden
        w_out = _decode(raw["head.w_out"])
        b_out = _decode(raw["head.b_out"])
        if w_out.shape != (1, config.hidden) or b_out.shape != (1,):
            raise CorruptFile("head shape mismatch")
        expected = {f"layers.{k}.{('W', 'U', 'b')[j]}{'_' + g if g else ''}"
                    for k in range(config.layers) for g in GATES[config.cell] for j in range(3)}
        if set(raw) != expected | {"head.w_out", "head.b_out"}:
            raise CorruptFile("unexpected parameter names")
    except CorruptFile:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptFile(f"malformed checkpoint: {exc!r}") from None
    return RnnModel(config, cells, w_out, b_out), doc.get("metadata", {})


def load_checkpoint(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise CorruptFile(f"{path} is not UTF-8 text") from None
    return loads_checkpoint(text)
