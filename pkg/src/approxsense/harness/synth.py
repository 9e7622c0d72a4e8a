"""Synthetic ECG records with known R-peak positions.

``phantom_record`` is piecewise linear (sparse second difference), so exact
recovery is possible in principle.  ``synthetic_ecg`` sums Gaussian P, Q, R,
S and T waves per beat with heart-rate variability, baseline wander and a
little sensor noise; it stands in for a real MLII recording when none is
available.
"""
from __future__ import annotations

import numpy as np

from .io import EcgRecord

# (offset from R in seconds, amplitude in mV)
PHANTOM_KNOTS = [
    (-0.25, 0.0), (-0.18, 0.15), (-0.11, 0.0),
    (-0.05, 0.0), (0.0, 1.2), (0.05, 0.0),
    (0.15, 0.0), (0.30, 0.35), (0.45, 0.0),
]

# (offset s, amplitude mV, width s) for P, Q, R, S, T
GAUSS_WAVES = [
    (-0.20, 0.12, 0.025),
    (-0.03, -0.12, 0.010),
    (0.0, 1.10, 0.011),
    (0.03, -0.25, 0.010),
    (0.28, 0.30, 0.050),
]


def _beat_times(duration_s, hr_bpm, jitter, rng, first=0.5):
    rr = 60.0 / hr_bpm
    t, out = first, []
    while t < duration_s - 0.5:
        out.append(t)
        t += rr * (1.0 + jitter * rng.standard_normal())
    return np.array(out)


def phantom_record(duration_s: float = 10.0, fs: float = 360.0, hr_bpm: float = 75.0,
                   seed: int = 0, offset: float = -0.1) -> EcgRecord:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    r_idx = np.round(_beat_times(duration_s, hr_bpm, 0.03, rng) * fs).astype(np.int64)
    kx, ky = [0.0], [0.0]
    for r in r_idx:
        for dt, amp in PHANTOM_KNOTS:
            t = r + dt * fs
            if kx[-1] < t < n - 1:
                kx.append(t)
                ky.append(amp)
    kx.append(n - 1.0)
    ky.append(0.0)
    x = np.interp(np.arange(n), kx, ky) + offset
    return EcgRecord(x, fs=fs, annotations=r_idx[r_idx < n], name="phantom")


def synthetic_ecg(duration_s: float = 60.0, fs: float = 360.0, hr_bpm: float = 75.0,
                  seed: int = 0, noise_mv: float = 0.01, wander_mv: float = 0.05) -> EcgRecord:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    beats = _beat_times(duration_s, hr_bpm, 0.04, rng)
    x = np.full(n, -0.3)
    for tb in beats:
        scale = 1.0 + 0.03 * rng.standard_normal()
        for dt, amp, width in GAUSS_WAVES:
            c = tb + dt
            lo, hi = np.searchsorted(t, [c - 5 * width, c + 5 * width])
            x[lo:hi] += scale * amp * np.exp(-0.5 * ((t[lo:hi] - c) / width) ** 2)
    x += wander_mv * np.sin(2 * np.pi * 0.25 * t + rng.uniform(0, 2 * np.pi))
    x += noise_mv * rng.standard_normal(n)
    r_idx = np.round(beats * fs).astype(np.int64)
    return EcgRecord(x, fs=fs, annotations=r_idx[r_idx < n], name="synthetic")
