"""Command-line entry point: ``approxsense <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..arith import adder_error_metrics, approx_fraction_to_bits, load_library
from ..energy import estimate_energy
from ..errors import ConfigError, FormatError, InputError
from ..metrics import detect_rpeaks
from ..sensing import SensingPlan
from . import plots
from .config import load_config
from .io import write_signal_csv
from .pipeline import (
    NOISE_COLUMNS, REPORT_COLUMNS, acquire_record, load_record, reconstruct_frames,
    report_csv, run_noise_sweep, run_pipeline, run_sweep, write_report,
)

log = logging.getLogger("approxsense")


def _csv_floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _csv_ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _config(args):
    return load_config(args.config, args.set or ())


def cmd_acquire(args):
    cfg = _config(args)
    rec = load_record(cfg)
    acq = acquire_record(cfg, rec, cfg.adders.model, cfg.adders.approx_pct, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    acq.plan.save(out / "plan.toml")
    with open(out / "measurements.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "row", "raw", "value", "received"])
        for i, (y, rx) in enumerate(zip(acq.measurements, acq.received)):
            vals = y.values()
            for k in range(len(y)):
                w.writerow([i, k, int(y.raw[k]), repr(float(vals[k])), repr(float(rx[k]))])
    energy = estimate_energy(acq.trace, load_library(cfg.adders.library))
    meta = {
        "record": rec.name, "fs": rec.fs, "scale": acq.scale, "seed": args.seed,
        "model": cfg.adders.model, "approx_pct": cfg.adders.approx_pct,
        "approx_bits": acq.adders.approx_bits, "width": acq.adders.width,
        "integer_bits": cfg.sensing.integer_bits, "fractional_bits": cfg.sensing.fractional_bits,
        "frames": len(acq.measurements), "cell_evaluations": dict(sorted(acq.trace.counts.items())),
        "energy_total": energy.total_cost, "energy_baseline": energy.baseline_cost,
        "energy_savings_pct": energy.savings_pct,
    }
    (out / "acquisition.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"{len(acq.measurements)} frames -> {out}; energy savings {energy.savings_pct:.2f}%")


def _read_measurements(path, column):
    frames = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                frames.setdefault(int(row["frame"]), []).append(float(row[column]))
            except (KeyError, ValueError) as e:
                raise FormatError(f"{path}:{lineno}: bad measurement row ({e})") from None
    return [np.array(frames[i]) for i in sorted(frames)]


def cmd_reconstruct(args):
    cfg = _config(args)
    plan = SensingPlan.load(args.plan)
    received = _read_measurements(args.measurements, args.column)
    meta_path = Path(args.measurements).with_name("acquisition.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    scale = args.scale if args.scale is not None else meta.get("scale", 1.0)
    fs = meta.get("fs", cfg.record.fs)
    x = reconstruct_frames(received, plan, cfg.recon.params, cfg.recon.fmt, scale)
    write_signal_csv(args.out, x, annotations=detect_rpeaks(x, fs), fs=fs)
    print(f"{len(received)} frames reconstructed -> {args.out}")


def _emit(rows, out, columns):
    if out:
        write_report(rows, out, columns)
        print(f"{len(rows)} rows -> {out}")
    else:
        sys.stdout.write(report_csv(rows, columns))


def cmd_run(args):
    cfg = _config(args)
    if args.seeds:
        cfg = cfg.replace(sweep={"seeds": _csv_ints(args.seeds)})
    trials = []
    rows = run_pipeline(cfg, trials=trials)
    _emit(rows, args.out, REPORT_COLUMNS)
    if args.out and not args.no_plots:
        t = trials[0]
        path = Path(args.out).with_suffix("").as_posix() + "_signal.svg"
        plots.plot_reconstruction(t.reference, t.reconstruction, t.fs, path,
                                  peaks=detect_rpeaks(t.reconstruction, t.fs), seconds=5)
        print(f"figure -> {path}")


def cmd_sweep(args):
    cfg = _config(args)
    models = args.models.split(",") if args.models else None
    pcts = _csv_floats(args.pcts) if args.pcts else None
    seeds = _csv_ints(args.seeds) if args.seeds else None
    rows = run_sweep(cfg, models, pcts, seeds, jobs=args.jobs)
    _emit(rows, args.out, REPORT_COLUMNS)
    if args.out and cfg.sweep.plots and not args.no_plots:
        for p in plots.plot_sweep(rows, Path(args.out).with_suffix("")):
            print(f"figure -> {p}")


def cmd_noise_sweep(args):
    cfg = _config(args)
    if args.injection:
        cfg = cfg.replace(noise={"injection_point": args.injection})
    variances = _csv_floats(args.variances) if args.variances else None
    seeds = _csv_ints(args.seeds) if args.seeds else None
    rows = run_noise_sweep(cfg, variances, seeds=seeds)
    _emit(rows, args.out, NOISE_COLUMNS)
    if args.out and not args.no_plots:
        print(f"figure -> {plots.plot_noise_sweep(rows, Path(args.out).with_suffix(''))}")


def cmd_adder_metrics(args):
    lib = load_library(args.library)
    names = args.models.split(",") if args.models else list(lib)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        _write_adder_metrics(csv.writer(fh, lineterminator="\n"), lib, names, args)
    finally:
        if args.out:
            fh.close()


def _write_adder_metrics(w, lib, names, args):
    w.writerow(["model", "width", "approx_pct", "approx_bits", "error_rate",
                "mean_error_distance", "max_error_distance", "cost"])
    for name in names:
        if name not in lib:
            raise ConfigError(f"unknown adder model {name!r}")
        for pct in _csv_floats(args.pcts):
            k = approx_fraction_to_bits(pct, args.width)
            m = adder_error_metrics(lib[name], args.width, k, samples=args.samples, seed=args.seed)
            w.writerow([name, args.width, f"{pct:g}", k, f"{m['error_rate']:.6f}",
                        f"{m['mean_error_distance']:.6f}", f"{m['max_error_distance']:.0f}",
                        f"{lib[name].cost:g}"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="approxsense", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("-c", "--config", help="experiment config (TOML)")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config key (repeatable)")
        return sp

    sp = with_config(sub.add_parser("acquire", help="compress a record, write plan + measurements"))
    sp.add_argument("--seed", type=int, default=0, help="trial seed")
    sp.add_argument("-o", "--out-dir", required=True)
    sp.set_defaults(func=cmd_acquire)

    sp = with_config(sub.add_parser("reconstruct", help="recover a signal from measurements"))
    sp.add_argument("--plan", required=True)
    sp.add_argument("--measurements", required=True)
    sp.add_argument("--column", default="received", choices=["received", "value"])
    sp.add_argument("--scale", type=float, help="normalization scale (default: acquisition.json)")
    sp.add_argument("-o", "--out", required=True)
    sp.set_defaults(func=cmd_reconstruct)

    sp = with_config(sub.add_parser("run", help="run the configured pipeline"))
    sp.add_argument("--seeds", help="comma-separated trial seeds")
    sp.add_argument("--no-plots", action="store_true")
    sp.add_argument("-o", "--out", help="report CSV (default: stdout); a figure is written next to it")
    sp.set_defaults(func=cmd_run)

    sp = with_config(sub.add_parser("sweep", help="design-space sweep over models x pcts x seeds"))
    sp.add_argument("--models")
    sp.add_argument("--pcts")
    sp.add_argument("--seeds")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--no-plots", action="store_true")
    sp.add_argument("-o", "--out", help="report CSV; figures are written next to it")
    sp.set_defaults(func=cmd_sweep)

    sp = with_config(sub.add_parser("noise-sweep", help="AWGN error-margin study, exact adders"))
    sp.add_argument("--variances")
    sp.add_argument("--seeds")
    sp.add_argument("--injection", choices=["measurements", "input_signal"])
    sp.add_argument("--no-plots", action="store_true")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_noise_sweep)

    sp = sub.add_parser("adder-metrics", help="error rate / distance of mixed ripple-carry adders")
    sp.add_argument("--library")
    sp.add_argument("--models")
    sp.add_argument("--width", type=int, default=8)
    sp.add_argument("--pcts", default="0,20,40,60,80,100")
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_adder_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, FormatError, InputError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
