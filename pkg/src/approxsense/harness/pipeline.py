"""End-to-end experiment runner and design-space sweeps.

Per frame: normalize and quantize -> sparse-multiplier acquisition on the
configured adders -> dequantize -> AWGN channel -> reconstruction ->
quantize the estimate to the reconstruction format.  Frames are stitched
back, rescaled to physical units and scored against the record.

Seeds: trial seed ``s`` selects the sensing plan
``split_seed(sensing.seed, s)`` and, for frame ``i``, the noise stream
``split_seed(noise.seed, s, i)``.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..arith import AdderConfig, approx_fraction_to_bits, load_library
from ..channel import NoiseSpec, add_awgn, noise_sweep, split_seed
from ..energy import EnergyTrace, estimate_energy
from ..errors import ConfigError, InputError
from ..fixedpoint import FxFormat, quantize_array, requantize
from ..metrics import der, detect_rpeaks, match_peaks, ppr, prd_pct, snr_db
from ..recon import reconstruct
from ..sensing import acquire, gen_bernoulli_plan
from .config import ExperimentConfig
from .io import EcgRecord, load_annotations, load_csv, load_mit212
from .synth import phantom_record, synthetic_ecg

REPORT_COLUMNS = [
    "model", "approx_pct", "seed", "frame_count", "snr_db", "prd_pct", "der_pct",
    "ppr_pct", "tp", "fp", "fn", "energy_total", "energy_baseline",
    "energy_savings_pct", "pareto", "error",
]
NOISE_COLUMNS = ["variance"] + REPORT_COLUMNS


def load_record(cfg: ExperimentConfig) -> EcgRecord:
    rc = cfg.record
    if rc.source == "phantom":
        return phantom_record(rc.duration_s, rc.fs, rc.hr_bpm, rc.seed)
    if rc.source == "synthetic":
        return synthetic_ecg(rc.duration_s, rc.fs, rc.hr_bpm, rc.seed)
    if rc.path is None:
        raise ConfigError(f"record source {rc.source!r} needs [record] path")
    if rc.source == "csv":
        rec = load_csv(rc.path, fs=rc.fs)
        if rc.annotations:
            ann = load_annotations(rc.annotations)
            rec = EcgRecord(rec.samples, rec.fs, annotations=ann[ann < len(rec.samples)],
                            name=rec.name)
        if rc.n_samples:
            ann = rec.annotations
            rec = EcgRecord(rec.samples[:rc.n_samples], rec.fs, name=rec.name,
                            annotations=None if ann is None else ann[ann < rc.n_samples])
        return rec
    return load_mit212(rc.path, rc.channel, rc.n_samples, rc.fs, rc.gain, rc.baseline,
                       annotations=rc.annotations)


def segment_and_normalize(rec: EcgRecord, N: int, fmt: FxFormat):
    """Split into whole frames of ``N`` samples scaled by the global max |x|.

    Returns ``(frames, scale)``; frames are quantized in ``fmt``.
    """
    n_frames = len(rec.samples) // N
    if n_frames == 0:
        raise InputError(f"record of {len(rec.samples)} samples is shorter than one frame ({N})")
    body = rec.samples[:n_frames * N]
    scale = float(np.max(np.abs(body)))
    if scale == 0:
        scale = 1.0
    frames = [quantize_array(body[i * N:(i + 1) * N] / scale, fmt) for i in range(n_frames)]
    return frames, scale


@dataclass
class Acquisition:
    """Sensor-side output of one trial: what goes over the channel."""
    plan: object
    measurements: list  # FxVector per frame, as computed by the adders
    received: list  # real arrays per frame, after the channel
    trace: EnergyTrace
    scale: float
    adders: AdderConfig


@dataclass
class Trial:
    """Everything one (model, pct, seed) cell produces."""
    reconstruction: np.ndarray
    reference: np.ndarray
    acquisition: Acquisition
    row: dict
    fs: float = 360.0


def _reference_peaks(rec: EcgRecord, n: int):
    if rec.annotations is not None:
        return rec.annotations[rec.annotations < n]
    return detect_rpeaks(rec.samples[:n], rec.fs)


def acquire_record(cfg: ExperimentConfig, rec: EcgRecord, model: str, pct: float, seed: int,
                   variance: float | None = None, library=None) -> Acquisition:
    library = library or load_library(cfg.adders.library)
    if model not in library:
        raise ConfigError(f"adder model {model!r} not in library ({sorted(library)})")
    fmt = cfg.sensing.fmt
    adders = AdderConfig(library[model], approx_fraction_to_bits(pct, fmt.width), fmt.width,
                         library["exact"])
    variance = cfg.noise.variance if variance is None else variance
    plan = gen_bernoulli_plan(cfg.sensing.M, cfg.sensing.N, cfg.sensing.r,
                              split_seed(cfg.sensing.seed, seed))
    frames, scale = segment_and_normalize(rec, cfg.sensing.N, fmt)
    trace = EnergyTrace()
    measurements, received = [], []
    for i, frame in enumerate(frames):
        spec = NoiseSpec(variance, split_seed(cfg.noise.seed, seed, i), cfg.noise.injection_point)
        if spec.injection_point == "input_signal":
            noisy = np.clip(add_awgn(frame.values(), spec), fmt.min_value, fmt.max_value)
            frame = quantize_array(noisy, fmt)
        y = acquire(frame, plan, adders, trace)
        y_real = y.values()
        if spec.injection_point == "measurements":
            y_real = add_awgn(y_real, spec)
        measurements.append(y)
        received.append(y_real)
    return Acquisition(plan, measurements, received, trace, scale, adders)


def reconstruct_frames(received, plan, params, fmt: FxFormat, scale: float) -> np.ndarray:
    """Reconstruct every frame, quantize to ``fmt`` and stitch in physical units."""
    parts = [requantize(reconstruct(y, plan, params).x_star, fmt) for y in received]
    return np.concatenate(parts) * scale


def run_trial(cfg: ExperimentConfig, rec: EcgRecord, model: str, pct: float, seed: int,
              variance: float | None = None, library=None) -> Trial:
    t0 = time.perf_counter()
    library = library or load_library(cfg.adders.library)
    acq = acquire_record(cfg, rec, model, pct, seed, variance, library)
    x_star = reconstruct_frames(acq.received, acq.plan, cfg.recon.params, cfg.recon.fmt,
                                acq.scale)
    ref = rec.samples[:len(x_star)]
    truth = _reference_peaks(rec, len(x_star))
    m = match_peaks(detect_rpeaks(x_star, rec.fs), truth, cfg.record.match_tol)
    energy = estimate_energy(acq.trace, library)
    row = {
        "model": model, "approx_pct": pct, "seed": seed, "frame_count": len(acq.received),
        "snr_db": snr_db(ref, x_star), "prd_pct": prd_pct(ref, x_star),
        "der_pct": der(m), "ppr_pct": ppr(m), "tp": m.TP, "fp": m.FP, "fn": m.FN,
        "energy_total": energy.total_cost, "energy_baseline": energy.baseline_cost,
        "energy_savings_pct": energy.savings_pct, "pareto": 0, "error": "",
        # not part of the CSV: varies run to run
        "wall_time_s": time.perf_counter() - t0,
    }
    return Trial(x_star, ref, acq, row, rec.fs)


def run_pipeline(cfg: ExperimentConfig, rec: EcgRecord | None = None, trials=None) -> list:
    """One report row per trial seed for the configured model and pct.

    Pass a list as ``trials`` to also collect the full :class:`Trial` objects.
    """
    rec = rec if rec is not None else load_record(cfg)
    library = load_library(cfg.adders.library)
    rows = []
    for s in cfg.sweep.seeds:
        trial = run_trial(cfg, rec, cfg.adders.model, cfg.adders.approx_pct, s, library=library)
        if trials is not None:
            trials.append(trial)
        rows.append(trial.row)
    for r, flag in zip(rows, pareto_flags(rows)):
        r["pareto"] = flag
    return rows


def _failed_row(model, pct, seed, exc):
    row = {c: "" for c in REPORT_COLUMNS}
    row.update(model=model, approx_pct=pct, seed=seed, pareto=0,
               error=f"{type(exc).__name__}: {exc}")
    return row


def _sweep_cell(args):
    cfg, rec, model, pct, seed = args
    try:
        return run_trial(cfg, rec, model, pct, seed).row
    except Exception as exc:  # recorded in the report, the sweep goes on
        return _failed_row(model, pct, seed, exc)


def pareto_flags(rows) -> list:
    """1 for rows whose (model, pct) config is not dominated in
    (energy_total lower, median snr_db higher) by any other config."""
    configs = {}
    for r in rows:
        if r["error"]:
            continue
        c = configs.setdefault((r["model"], r["approx_pct"]), {"e": r["energy_total"], "s": []})
        c["s"].append(r["snr_db"])
    score = {k: (v["e"], float(np.median(v["s"]))) for k, v in configs.items()}
    front = set()
    for k, (e, s) in score.items():
        dominated = any(e2 <= e and s2 >= s and (e2 < e or s2 > s)
                        for k2, (e2, s2) in score.items() if k2 != k)
        if not dominated:
            front.add(k)
    return [int(not r["error"] and (r["model"], r["approx_pct"]) in front) for r in rows]


def run_sweep(cfg: ExperimentConfig, models=None, pcts=None, seeds=None,
              rec: EcgRecord | None = None, jobs: int | None = None) -> list:
    """Full-factorial models x pcts x seeds, rows in grid order."""
    models = list(models if models is not None else cfg.sweep.models)
    pcts = list(pcts if pcts is not None else cfg.sweep.pcts)
    seeds = list(seeds if seeds is not None else cfg.sweep.seeds)
    if not (models and pcts and seeds):
        raise ConfigError("sweep grid is empty")
    rec = rec if rec is not None else load_record(cfg)
    cells = [(cfg, rec, m, p, s) for m in models for p in pcts for s in seeds]
    jobs = cfg.sweep.jobs if jobs is None else jobs
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    for r, flag in zip(rows, pareto_flags(rows)):
        r["pareto"] = flag
    return rows


def run_noise_sweep(cfg: ExperimentConfig, variances=None, rec: EcgRecord | None = None,
                    seeds=None) -> list:
    """Error-margin study: exact adders, one row per (variance, seed)."""
    variances = list(variances if variances is not None else cfg.sweep.variances)
    seeds = list(seeds if seeds is not None else cfg.sweep.seeds)
    rec = rec if rec is not None else load_record(cfg)
    library = load_library(cfg.adders.library)

    def one(_, var):
        out = []
        for s in seeds:
            row = run_trial(cfg, rec, "exact", 0, s, variance=var, library=library).row
            out.append({"variance": var, **row})
        return out

    return [row for rows in noise_sweep(rec.samples, variances, one) for row in rows]


COMPACT_COLUMNS = {"approx_pct", "variance"}


def _fmt(v, compact=False):
    if compact and isinstance(v, (int, float, np.number)):
        return f"{float(v):g}"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return f"{float(v):.6f}"
    return str(v)


def report_csv(rows, columns=REPORT_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, ""), c in COMPACT_COLUMNS) for c in columns])
    return buf.getvalue()


def write_report(rows, path, columns=REPORT_COLUMNS):
    with open(path, "w", newline="") as fh:
        fh.write(report_csv(rows, columns))

