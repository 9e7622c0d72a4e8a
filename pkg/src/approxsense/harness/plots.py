"""SVG figures written next to the CSV reports."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp, so identical data gives identical files
plt.rcParams["svg.hashsalt"] = "approxsense"
SVG_META = {"Date": None}


def _median_by(rows, key, value):
    groups = defaultdict(list)
    for r in rows:
        if r.get("error"):
            continue
        v = r[value]
        if v == v:  # drop NaN
            groups[(r["model"], r[key])].append(v)
    out = defaultdict(list)
    for (model, x), vals in sorted(groups.items()):
        out[model].append((x, float(np.median(vals))))
    return out


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return Path(path)


def plot_sweep(rows, prefix) -> list:
    """SNR-vs-pct and energy-savings-vs-pct, one line per adder model."""
    prefix = Path(prefix)
    written = []
    for value, label, suffix in (("snr_db", "median SNR [dB]", "snr"),
                                 ("energy_savings_pct", "energy savings [%]", "energy")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for model, pts in _median_by(rows, "approx_pct", value).items():
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=model)
        ax.set_xlabel("approximate bits [% of word]")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8, ncol=2)
        written.append(_save(fig, prefix.parent / f"{prefix.name}_{suffix}.svg"))
    return written


def plot_noise_sweep(rows, prefix) -> Path:
    prefix = Path(prefix)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.5))
    for ax, (value, label) in zip(axes, (("snr_db", "SNR [dB]"), ("prd_pct", "PRD [%]"),
                                          ("der_pct", "DER [%]"))):
        pts = defaultdict(list)
        for r in rows:
            if r[value] == r[value]:
                pts[r["variance"]].append(r[value])
        xs = sorted(pts)
        ax.plot(xs, [np.median(pts[x]) for x in xs], marker="o")
        ax.set_xscale("symlog", linthresh=1e-4)
        ax.set_xlabel("AWGN variance")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    return _save(fig, prefix.parent / f"{prefix.name}_noise.svg")


def plot_reconstruction(reference, reconstruction, fs, path, peaks=None, seconds=None):
    n = len(reconstruction) if seconds is None else min(len(reconstruction), int(seconds * fs))
    t = np.arange(n) / fs
    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(t, reference[:n], lw=0.8, label="original")
    ax.plot(t, reconstruction[:n], lw=0.8, label="reconstructed")
    if peaks is not None:
        p = np.asarray(peaks)
        p = p[p < n]
        ax.plot(p / fs, reconstruction[p], "o", mfc="none", ms=6, label="detected R")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("amplitude")
    ax.legend(fontsize=8)
    return _save(fig, path)
