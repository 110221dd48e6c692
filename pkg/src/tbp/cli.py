"""Command-line entry point: ``tbp <command> [options]``.

Every command reads and writes inside one output directory (``--out`` or
``output_dir`` from the config). Files are written atomically and a
``manifest.json`` records, per command, the effective configuration and
the SHA-256 of every artifact produced.

Exit codes: 0 success, 2 input/config error, 3 numerical failure,
4 frontier target unreachable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .config import load_run_config
from .errors import InputError, NumericalError, TargetOutOfRange, TbpError
from .evaluation import (
    accuracy_to_csv,
    format_summary,
    hit_ratio_summary,
    hit_ratios_by_asset,
    hit_ratios_to_csv,
    threshold_accuracy,
)
from .fixtures import write_universe
from .forecast import forecast_panel
from .frontier import (
    build_frontier,
    fit_to_csv,
    frontier_backtests,
    frontier_model,
    frontier_to_csv,
    manage_step,
)
from .market_data import (
    DatasetSplit,
    load_panel,
    panel_to_csv,
    read_panel_csv,
    split_panel,
    stack_samples,
    summarize_split,
    summary_to_csv,
    make_windows,
)
from .portfolio import TbpConfig, asset_backtest, backtest, ewp_backtest, stats_to_csv
from .rnn import (
    NetworkConfig,
    default_grid,
    dumps_checkpoint,
    grid_search,
    init_model,
    load_checkpoint,
    train,
)
from .seeding import derive_seed

log = logging.getLogger("tbp")

MANIFEST_SCHEMA = 1
EXIT_INPUT, EXIT_NUMERIC, EXIT_TARGET = 2, 3, 4


# --- file helpers ----------------------------------------------------------

def _sha256(data):
    return hashlib.sha256(data).hexdigest()


class Outputs:
    """Atomic writer that remembers what it produced."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written = {}

    def write(self, rel, text):
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        self.written[str(Path(rel).as_posix())] = _sha256(data)
        return path

    def record(self, command, config, extra=None):
        path = self.root / "manifest.json"
        manifest = {"schema_version": MANIFEST_SCHEMA, "commands": {}}
        if path.exists():
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                pass
        entry = {"config": config, "artifacts": dict(sorted(self.written.items()))}
        entry.update(extra or {})
        manifest.setdefault("commands", {})[command] = entry
        manifest["schema_version"] = MANIFEST_SCHEMA
        manifest["version"] = __version__
        text = json.dumps(manifest, indent=1, sort_keys=True, default=_json_default) + "\n"
        tmp = path.with_name("manifest.json.tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)


def _json_default(value):
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return value.value
    return str(value)


def _manifest_config(cfg):
    out = cfg.to_dict()
    out.pop("output_dir")
    for k, v in out.items():
        if isinstance(v, float) and not math.isfinite(v):
            out[k] = repr(v)
    return out


def _file_digest(path):
    return _sha256(Path(path).read_bytes())


# --- shared loading --------------------------------------------------------

def _config(args, **overrides):
    merged = {"output_dir": getattr(args, "out", None), "seed": getattr(args, "seed", None)}
    merged.update(overrides)
    return load_run_config(getattr(args, "config", None), merged)


def _panel_path(args, out):
    return Path(args.panel) if getattr(args, "panel", None) else out / "panel.csv"


def _load_panel_and_split(args, cfg, out):
    path = _panel_path(args, out)
    if not path.exists():
        raise InputError(f"panel file {path} not found; run `tbp ingest` first")
    panel = read_panel_csv(path)
    split_file = path.parent / "split.json"
    if split_file.exists():
        doc = json.loads(split_file.read_text(encoding="utf-8"))
        split = DatasetSplit(*(range(*doc[k]) for k in ("train", "validation", "test")))
        if split.test.stop != panel.n_months:
            raise InputError(f"{split_file} does not match {path}")
    else:
        split = split_panel(panel, cfg.train_frac, cfg.val_frac, cfg.seq_len)
    return panel, split, _file_digest(path)


def _network_config(cfg, seed_tag="network"):
    return NetworkConfig(cell=cfg.cell, layers=cfg.layers, hidden=cfg.hidden,
                         dropout_rate=cfg.dropout, seq_len=cfg.seq_len, lr=cfg.lr,
                         batch=cfg.batch, max_epochs=cfg.max_epochs, patience=cfg.patience,
                         seed=derive_seed(cfg.seed, seed_tag))


def _load_model(args, panel_digest):
    model, meta = load_checkpoint(args.checkpoint)
    recorded = meta.get("panel_sha256")
    if recorded and recorded != panel_digest:
        raise InputError(f"checkpoint {args.checkpoint} was trained on a different panel")
    return model, meta


def _test_forecasts(model, panel, split):
    if model.config.input_dim != panel.features.shape[2]:
        raise InputError("checkpoint input width does not match the panel")
    fc = forecast_panel(model, panel, split.test).realized_only()
    if not fc.anchors:
        raise InputError("test split has no usable anchor months")
    return fc


# --- commands --------------------------------------------------------------

def cmd_fixture(args):
    paths = write_universe(args.out, seed=args.seed or 0, months=args.months)
    print(f"wrote {len(paths)} asset files to {args.out}")
    return 0


def cmd_ingest(args):
    cfg = _config(args, data_dir=args.data_dir, aggregation=args.agg)
    out = Outputs(cfg.output_dir)
    panel = load_panel(cfg.data_dir, cfg.aggregation)
    split = split_panel(panel, cfg.train_frac, cfg.val_frac, cfg.seq_len)
    out.write("panel.csv", panel_to_csv(panel))
    out.write("split.json", json.dumps(split.as_dict(), indent=1, sort_keys=True) + "\n")
    out.record("ingest", _manifest_config(cfg))
    print(f"panel: {panel.n_assets} assets x {panel.n_months} months "
          f"(train {len(split.train)}, validation {len(split.validation)}, test {len(split.test)})")
    return 0


def cmd_report(args):
    cfg = _config(args)
    out = Outputs(cfg.output_dir)
    panel, split, _ = _load_panel_and_split(args, cfg, out.root)
    out.write("report/feature_stats.csv", summary_to_csv(summarize_split(panel, split)))
    out.record("report", _manifest_config(cfg))
    return 0


def cmd_train(args):
    cfg = _config(args, cell=args.cell)
    out = Outputs(cfg.output_dir)
    panel, split, digest = _load_panel_and_split(args, cfg, out.root)
    X, y = stack_samples(make_windows(panel, split.train, cfg.seq_len))
    Xv, yv = stack_samples(make_windows(panel, split.validation, cfg.seq_len))
    if args.grid:
        base = _network_config(cfg)
        if args.grid == "default":
            grid = default_grid(base)
        else:
            grid = default_grid(base, **_parse_grid_spec(args.grid))
        result = grid_search(grid, X, y, Xv, yv, seed=derive_seed(cfg.seed, "grid"))
        lines = ["index,cell,layers,hidden,dropout_rate,val_loss,best"]
        for k, (c, v) in enumerate(zip(result.configs, result.val_losses)):
            lines.append(f"{k},{c.cell.value},{c.layers},{c.hidden},{c.dropout_rate!r},"
                         f"{v!r},{int(k == result.best_index)}")
            out.write(f"grid/history_{k:02d}.csv", result.histories[k].to_csv())
        out.write("grid/losses.csv", "\n".join(lines) + "\n")
        model = result.models[result.best_index]
        history = result.histories[result.best_index]
    else:
        model, history = train(init_model(_network_config(cfg)), X, y, Xv, yv)
    meta = {"epochs_run": len(history.epochs), "best_epoch": history.best_epoch,
            "best_val_loss": history.best_val_loss, "seed": model.config.seed,
            "run_seed": cfg.seed, "panel_sha256": digest}
    out.write("checkpoint.json", dumps_checkpoint(model, meta))
    out.write("history.csv", history.to_csv())
    out.record("train", _manifest_config(cfg), {"grid": args.grid or None})
    print(f"trained {model.config.cell.value}: {len(history.epochs)} epochs, "
          f"best validation loss {history.best_val_loss:.6g}")
    return 0


def _parse_grid_spec(spec):
    """``layers=1,2;units=8,16;dropout=0,1`` -> keyword overrides."""
    out = {}
    for part in spec.split(";"):
        key, _, values = part.partition("=")
        key = key.strip()
        items = [v.strip() for v in values.split(",") if v.strip()]
        if key == "layers":
            out["layers"] = tuple(int(v) for v in items)
        elif key == "units":
            out["units"] = tuple(int(v) for v in items)
        elif key == "dropout":
            out["dropout"] = tuple(v.lower() in ("1", "true", "on", "yes") for v in items)
        else:
            raise InputError(f"unknown grid dimension {key!r}")
    return out


def cmd_evaluate(args):
    cfg = _config(args)
    out = Outputs(cfg.output_dir)
    panel, split, digest = _load_panel_and_split(args, cfg, out.root)
    model, _ = _load_model(args, digest)
    months = getattr(split, args.split)
    fc = forecast_panel(model, panel, months).realized_only()
    if not fc.anchors:
        raise InputError(f"{args.split} split has no usable anchor months")
    records = fc.records()
    ratios = hit_ratios_by_asset(records)
    out.write(f"evaluate/{args.split}_hit_ratios.csv",
              hit_ratios_to_csv(ratios, model.config.cell.value))
    out.write(f"evaluate/{args.split}_accuracy.csv",
              accuracy_to_csv(threshold_accuracy(records, cfg.thetas)))
    out.record("evaluate", _manifest_config(cfg), {"split": args.split})
    mean, sd = hit_ratio_summary(ratios)
    print(f"{model.config.cell.value} hit ratio (mean, SD): {format_summary(mean, sd)}")
    return 0


def cmd_backtest(args):
    cfg = _config(args, theta_plus=args.theta_plus, theta_minus=args.theta_minus,
                  mode=args.mode)
    out = Outputs(cfg.output_dir)
    panel, split, digest = _load_panel_and_split(args, cfg, out.root)
    model, _ = _load_model(args, digest)
    fc = _test_forecasts(model, panel, split)
    tbp_cfg = TbpConfig(cfg.mode, cfg.theta_plus, cfg.theta_minus)
    tbp = backtest(fc.months, fc.assets, fc.predictions, fc.realized, tbp_cfg)
    ewp = ewp_backtest(fc.months, fc.assets, fc.realized)
    rows = []
    for asset in fc.assets:
        res = asset_backtest(fc.months, fc.assets, fc.realized, asset)
        out.write(f"backtest/asset_{asset}.csv", res.to_csv())
        rows.append((asset, None, res.stats))
    rows.append(("EWP", None, ewp.stats))
    rows.append(("TBP", cfg.theta_plus if math.isfinite(cfg.theta_plus) else None, tbp.stats))
    out.write("backtest/tbp.csv", tbp.to_csv())
    out.write("backtest/ewp.csv", ewp.to_csv())
    out.write("backtest/stats.csv", stats_to_csv(rows))
    out.record("backtest", _manifest_config(cfg))
    s = tbp.stats
    print(f"TBP mean {s['mean']:.4f} SD {s['sd']:.4f} avg assets {s['average_assets']:.3f}; "
          f"final wealth {tbp.wealth[-1]:.4f} (EWP {ewp.wealth[-1]:.4f})")
    return 0


def _frontier(args, cfg, out):
    panel, split, digest = _load_panel_and_split(args, cfg, out.root)
    model, _ = _load_model(args, digest)
    return model, panel, split


def cmd_frontier(args):
    cfg = _config(args, thetas=args.thetas, window=args.window, mode=args.mode)
    out = Outputs(cfg.output_dir)
    model, panel, split = _frontier(args, cfg, out)
    fc = _test_forecasts(model, panel, split)
    backtests = frontier_backtests(fc, cfg.thetas, cfg.mode, cfg.theta_minus)
    points = build_frontier(backtests, cfg.window)
    fm = frontier_model(points)
    out.write("frontier/frontier.csv", frontier_to_csv(fm.points))
    out.write("frontier/fit.csv", fit_to_csv(fm.fit))
    out.record("frontier", _manifest_config(cfg))
    print(f"frontier: {len(points)} points over the last {cfg.window} test months")
    return 0


def cmd_manage(args):
    cfg = _config(args, thetas=args.thetas, window=args.window, mode=args.mode)
    out = Outputs(cfg.output_dir)
    model, panel, split = _frontier(args, cfg, out)
    axis, target = (("risk", args.target_risk) if args.target_risk is not None
                    else ("return", args.target_return))
    try:
        rec, fm = manage_step(model, panel, target, split, cfg.thetas, cfg.window, axis,
                              cfg.mode, cfg.theta_minus)
    except TargetOutOfRange as exc:
        p = exc.nearest
        print(f"target {axis} {target} unreachable; nearest achievable point: "
              f"theta={p.theta} risk={p.risk:.6g} return={p.ret:.6g}", file=sys.stderr)
        return EXIT_TARGET
    out.write("manage/frontier.csv", frontier_to_csv(fm.points))
    out.write("manage/fit.csv", fit_to_csv(fm.fit))
    out.write("manage/recommendation.json", rec.to_json())
    out.record("manage", _manifest_config(cfg), {"axis": axis, "target": target})
    members = ", ".join(a for a, _ in rec.members) or "(cash)"
    print(f"theta={rec.theta:.6g} expected risk {rec.expected_risk:.4f} return "
          f"{rec.expected_return:.4f}; {rec.decision_month} picks: {members}")
    return 0


# --- parser ----------------------------------------------------------------

def _add_common(p, checkpoint=False):
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="run seed (overrides config)")
    p.add_argument("--panel", help="panel CSV (default: <out>/panel.csv)")
    if checkpoint:
        p.add_argument("--checkpoint", required=True)


def _theta_arg(text):
    return text if text.strip().lower() == "all" else float(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tbp", description="Threshold-based portfolios from recurrent return forecasts.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="write the seeded synthetic 10-asset universe")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--months", type=int, default=240)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("ingest", help="daily CSVs -> monthly feature panel + split")
    p.add_argument("--config")
    p.add_argument("--data-dir")
    p.add_argument("--agg", choices=["last", "mean", "max", "min"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="per-split feature statistics")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("train", help="train a recurrent predictor")
    _add_common(p)
    p.add_argument("--cell", choices=["srnn", "lstm", "gru"])
    p.add_argument("--grid", nargs="?", const="default",
                   help="grid search; optional spec 'layers=1,2;units=8,16;dropout=0,1'")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="hit ratios and threshold accuracy")
    _add_common(p, checkpoint=True)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("backtest", help="TBP, EWP and single-asset backtests")
    _add_common(p, checkpoint=True)
    p.add_argument("--theta-plus", type=_theta_arg, help="long threshold or 'all'")
    p.add_argument("--theta-minus", type=float)
    p.add_argument("--mode", choices=["long", "short", "long-short"])
    p.set_defaults(func=cmd_backtest)

    helps = {"frontier": "risk/return per threshold plus a cubic fit",
             "manage": "threshold and next-month portfolio for a risk or return target"}
    for name, func in (("frontier", cmd_frontier), ("manage", cmd_manage)):
        p = sub.add_parser(name, help=helps[name])
        _add_common(p, checkpoint=True)
        p.add_argument("--thetas", help="lo:hi:step")
        p.add_argument("--window", type=int)
        p.add_argument("--mode", choices=["long", "short", "long-short"])
        if name == "manage":
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--target-risk", type=float)
            g.add_argument("--target-return", type=float)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TargetOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TARGET
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, TbpError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
