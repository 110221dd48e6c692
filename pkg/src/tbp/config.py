"""Run configuration: INI-style ``key = value`` file with sections.

Example::

    [data]
    data_dir = fixture
    aggregation = last

    [network]
    cell = lstm
    hidden = 36
    max_epochs = 200

    [portfolio]
    mode = long
    thetas = 0:0.025:0.0025
    window = 10

    [run]
    seed = 7
    output_dir = out

Unknown sections or keys are rejected. Command-line flags override values
read from the file.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace

from .errors import InputError
from .frontier import theta_grid
from .market_data import Aggregation
from .portfolio import TbpMode
from .rnn.cells import CellType

SECTIONS = {
    "data": ("data_dir", "aggregation", "train_frac", "val_frac"),
    "network": ("cell", "layers", "hidden", "dropout", "seq_len", "lr", "batch",
                "max_epochs", "patience"),
    "portfolio": ("mode", "theta_plus", "theta_minus", "thetas", "window"),
    "run": ("seed", "output_dir"),
}


def parse_thetas(text):
    """``lo:hi:step`` -> inclusive grid; a comma list is taken verbatim."""
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi, step = (float(t) for t in text.split(":"))
            return theta_grid(lo, hi, step)
        return sorted(float(t) for t in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad theta grid {text!r}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = "data"
    aggregation: Aggregation = Aggregation.LAST
    train_frac: float = 0.7
    val_frac: float = 0.3
    cell: CellType = CellType.LSTM
    layers: int = 1
    hidden: int = 36
    dropout: float = 0.5
    seq_len: int = 36
    lr: float = 0.001
    batch: int = 20
    max_epochs: int = 200
    patience: int = 10
    mode: TbpMode = TbpMode.LONG
    theta_plus: float = 0.0
    theta_minus: float = 0.0
    thetas: tuple = tuple(theta_grid())
    window: int = 10
    seed: int = 0
    output_dir: str = "out"

    def validate(self):
        try:
            checked = replace(
                self,
                aggregation=Aggregation(self.aggregation),
                cell=CellType(self.cell),
                mode=TbpMode(self.mode),
                thetas=tuple(parse_thetas(self.thetas) if isinstance(self.thetas, str)
                             else (float(t) for t in self.thetas)),
            )
            for name, caster in _CASTS.items():
                object.__setattr__(checked, name, caster(getattr(checked, name)))
        except (TypeError, ValueError) as exc:
            raise InputError(f"invalid configuration: {exc}") from None
        if not 0 < checked.train_frac <= 1 or not 0 <= checked.val_frac < 1:
            raise InputError("train_frac must be in (0, 1] and val_frac in [0, 1)")
        if not 0 <= checked.dropout < 1:
            raise InputError("dropout must be in [0, 1)")
        if min(checked.layers, checked.hidden, checked.seq_len, checked.batch) < 1:
            raise InputError("layers, hidden, seq_len and batch must be positive")
        if checked.max_epochs < 0 or checked.patience < 0 or checked.window < 2:
            raise InputError("max_epochs and patience must be >= 0 and window >= 2")
        if checked.theta_minus < 0 or not checked.thetas:
            raise InputError("theta_minus must be >= 0 and the theta grid non-empty")
        return checked

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if hasattr(v, "value") else (list(v) if isinstance(v, tuple) else v)
        return out


def _theta_plus(value):
    if isinstance(value, str) and value.strip().lower() == "all":
        return -math.inf
    return float(value)


_CASTS = {
    "train_frac": float, "val_frac": float, "layers": int, "hidden": int, "dropout": float,
    "seq_len": int, "lr": float, "batch": int, "max_epochs": int, "patience": int,
    "theta_plus": _theta_plus, "theta_minus": float, "window": int, "seed": int,
    "data_dir": str, "output_dir": str,
}


def read_config(path):
    """Parse a config file into a dict of raw values (strings)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise InputError(f"{path}: unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise InputError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = value
    return values


def load_run_config(path=None, overrides=None):
    values = read_config(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(values) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise InputError(f"unknown configuration keys: {sorted(unknown)}")
    return RunConfig(**values).validate()
