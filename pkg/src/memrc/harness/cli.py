"""Command line entry point: ``memrc {run,sweep,separability,montecarlo,summarize}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .. import analysis
from ..device import NS, DeviceParams
from ..readout import save_checkpoint
from .config import (ConfigError, ExperimentConfig, expand_grid, from_dict, grid_axes,
                     load_document, variability_levels)
from .pipeline import PipelineError, load_dataset, monte_carlo, run_pipeline

log = logging.getLogger("memrc")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML experiment (or grid) file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--train-limit", type=int, metavar="N",
                   help="train on a seeded subset of N images; the test set is untouched")
    p.add_argument("--data-dir", type=Path, help="directory holding the MNIST IDX files")
    p.add_argument("--cache-dir", type=Path, help="feature cache directory")
    p.add_argument("--record-runtime", action="store_true",
                   help="fill the runtime_s column (makes result files run-dependent)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memrc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate one configuration")
    _common(p)

    p = sub.add_parser("sweep", help="run every point of a grid file")
    _common(p)
    p.add_argument("-j", "--jobs", type=int, default=1, help="grid points run in parallel")

    p = sub.add_parser("separability", help="single-device final-state and bin-occupancy tables")
    _common(p)
    p.add_argument("-L", "--length", type=int, default=4, help="pulse sequence length")
    p.add_argument("--tau-ns", type=float, nargs="+",
                   default=[1, 2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 50])
    p.add_argument("--bits", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6, 7])
    p.add_argument("--range", choices=["calibrated", "device"], default="calibrated",
                   dest="range_mode")

    p = sub.add_parser("montecarlo", help="device-to-device Monte-Carlo robustness sweep")
    _common(p)
    p.add_argument("--runs", type=int, help="runs per variability level")
    p.add_argument("--levels", type=float, nargs="+", help="variability fractions, e.g. 0.05 0.2")

    p = sub.add_parser("summarize", help="per-factor main effects over record CSVs")
    _common(p)
    p.add_argument("records", type=Path, nargs="+")
    return parser


def _load(args) -> tuple:
    doc = load_document(args.config) if args.config else {}
    cfg = from_dict(doc)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    if args.train_limit is not None:
        cfg = replace(cfg, train_limit=args.train_limit)
    if args.data_dir is not None:
        cfg = replace(cfg, data_dir=str(args.data_dir))
    if args.cache_dir is not None:
        cfg = replace(cfg, cache_dir=str(args.cache_dir))
    if args.record_runtime:
        cfg = replace(cfg, record_runtime=True)
    return cfg, doc


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


class RecordWriter:
    """Writes the header up front and flushes each row, so partial sweeps stay valid CSV."""

    def __init__(self, path: Path):
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(analysis.RECORD_COLUMNS)
        self.fh.flush()

    def __call__(self, rec: analysis.SweepRecord):
        self.w.writerow(rec.row())
        self.fh.flush()

    def close(self):
        self.fh.close()


def cmd_run(args) -> int:
    cfg, _ = _load(args)
    out = _out(cfg)
    res = run_pipeline(cfg)
    (out / "results.csv").write_text(analysis.records_csv([res.record]))
    np.savetxt(out / "confusion.csv", res.confusion, fmt="%d", delimiter=",")
    if cfg.checkpoint:
        save_checkpoint(out / "weights.ckpt", res.weights, cfg.seed, cfg.hash)
    print(f"accuracy {res.accuracy:.4f}  ({res.weights.n_features} devices, config {cfg.hash})")
    return 0


def cmd_sweep(args) -> int:
    cfg, doc = _load(args)
    grid = expand_grid(cfg, grid_axes(doc))
    out = _out(cfg)
    writer = RecordWriter(out / "sweep.csv")
    try:
        records = analysis.factor_sweep(grid, on_record=writer, jobs=args.jobs)
    finally:
        writer.close()
    ok = sum(not np.isnan(r.accuracy) for r in records)
    print(f"{ok}/{len(records)} grid points completed -> {out / 'sweep.csv'}")
    return 0 if ok == len(records) else 1


def cmd_separability(args) -> int:
    cfg, _ = _load(args)
    out = _out(cfg)
    params = cfg.device
    taus = [t * NS for t in args.tau_ns]
    table = analysis.final_state_sweep(args.length, taus, params)
    counts = analysis.bin_occupancy(table, args.bits, params, args.range_mode)
    (out / f"separability_L{args.length}.csv").write_text(table.to_long_csv())
    (out / f"occupancy_L{args.length}.csv").write_text(
        analysis.occupancy_csv(table, args.bits, counts))
    print("tau_ns  " + " ".join(f"{b}b".rjust(4) for b in args.bits))
    for j, t in enumerate(args.tau_ns):
        print(f"{t:6g}  " + " ".join(str(c).rjust(4) for c in counts[j]))
    return 0


def cmd_montecarlo(args) -> int:
    cfg, doc = _load(args)
    levels = args.levels if args.levels else variability_levels(doc)
    runs = args.runs or cfg.variability.runs
    out = _out(cfg)
    data = load_dataset(cfg.data_dir)
    writer = RecordWriter(out / "montecarlo_runs.csv")
    try:
        nominal = replace(cfg, variability=replace(cfg.variability, d2d_pct=0.0, c2c_pct=0.0))
        base = run_pipeline(nominal, data)
        writer(base.record)
        stats = []
        for p in levels:
            vcfg = replace(cfg.variability, d2d_pct=p, c2c_pct=0.0, vary_lambda_eta=True, runs=runs)
            stats.append(monte_carlo(cfg, vcfg, data, on_record=writer))
    finally:
        writer.close()
    with open(out / "montecarlo_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variability_pct", "runs", "mean", "min", "max", "std", "mean_drop_pp"])
        w.writerow([0.0, 1, *(f"{base.accuracy:.6f}",) * 3, "0.000000", "0.000"])
        for s in stats:
            w.writerow([f"{s.variability_pct:g}", len(s.accuracies), f"{s.mean:.6f}",
                        f"{s.min:.6f}", f"{s.max:.6f}", f"{s.std:.6f}",
                        f"{100 * (base.accuracy - s.mean):.3f}"])
    print(f"baseline {base.accuracy:.4f}")
    for s in stats:
        print(f"{100 * s.variability_pct:g}%: mean {s.mean:.4f} min {s.min:.4f} max {s.max:.4f}")
    return 0


def cmd_summarize(args) -> int:
    records = []
    for path in args.records:
        records.extend(analysis.read_records(path.read_text()))
    effects = analysis.main_effects(records)
    text = analysis.effects_csv(effects)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "effects.csv").write_text(text)
    for e in effects:
        levels = ", ".join(f"{k}: {v:.4f}" for k, v in e.level_means.items())
        print(f"{e.factor:16s} span {e.span:.4f}  [{levels}]")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "separability": cmd_separability,
            "montecarlo": cmd_montecarlo, "summarize": cmd_summarize}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, FileNotFoundError, PipelineError,
            analysis.SchemaError) as exc:
        print(f"memrc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
