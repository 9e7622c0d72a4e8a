"""Reconstruction quality metrics and R-peak detection scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from .errors import InputError

SNR_CAP_DB = 300.0
UNDEFINED = math.nan


def _pair(x, x_star):
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if x.shape != x_star.shape:
        raise InputError(f"length mismatch: {x.shape} vs {x_star.shape}")
    return x, x_star


def snr_db(x, x_star) -> float:
    """-20 log10(||x - x*|| / ||x||), capped at ``SNR_CAP_DB`` for x* == x."""
    x, x_star = _pair(x, x_star)
    ref = np.linalg.norm(x)
    if ref == 0:
        raise InputError("SNR undefined for an all-zero reference")
    err = np.linalg.norm(x - x_star)
    if err == 0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, -20.0 * math.log10(err / ref))


def prd(x, x_star) -> float:
    """||x - x*|| / ||x - mean(x)|| as a ratio; multiply by 100 for percent."""
    x, x_star = _pair(x, x_star)
    den = np.linalg.norm(x - x.mean())
    if den == 0:
        raise InputError("PRD undefined for a constant reference")
    return float(np.linalg.norm(x - x_star) / den)


def prd_pct(x, x_star) -> float:
    return 100.0 * prd(x, x_star)


def detect_rpeaks(x, fs: float, threshold: float = 0.6, window_s: float = 2.0,
                  refractory_s: float = 0.2) -> np.ndarray:
    """Amplitude R-peak detector.

    A sample is a candidate when it is a local maximum (strictly above its
    left neighbour, not below its right one) and exceeds ``threshold`` times
    the maximum of a centred ``window_s`` window.  Candidates are then taken
    in decreasing amplitude, dropping any within ``refractory_s`` of one
    already kept.
    """
    x = np.asarray(x, dtype=float)
    if fs <= 0:
        raise InputError("sampling rate must be positive")
    if x.size < 3:
        return np.empty(0, dtype=np.int64)
    win = max(1, int(round(window_s * fs)))
    theta = threshold * maximum_filter1d(x, size=win, mode="nearest")
    mid = x[1:-1]
    local = (mid > x[:-2]) & (mid >= x[2:]) & (mid > theta[1:-1])
    cand = np.flatnonzero(local) + 1
    if cand.size == 0:
        return cand.astype(np.int64)
    refractory = int(round(refractory_s * fs))
    # stable sort: equal amplitudes resolve to the earlier sample
    order = cand[np.argsort(-x[cand], kind="stable")]
    kept = []
    taken = np.zeros(x.size, dtype=bool)
    for i in order:
        lo, hi = max(0, i - refractory), min(x.size, i + refractory + 1)
        if not taken[lo:hi].any():
            kept.append(i)
            taken[i] = True
    return np.sort(np.array(kept, dtype=np.int64))


@dataclass
class PeakMatchResult:
    TP: int
    FP: int
    FN: int
    pairs: list = field(default_factory=list)


def match_peaks(detected, truth, tol: int = 18) -> PeakMatchResult:
    """Greedy nearest-first one-to-one matching within ``tol`` samples."""
    detected = np.asarray(detected, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    cands = []
    for i, d in enumerate(detected):
        lo = np.searchsorted(truth, d - tol, side="left")
        hi = np.searchsorted(truth, d + tol, side="right")
        for j in range(lo, hi):
            cands.append((abs(int(d) - int(truth[j])), i, j))
    cands.sort()
    used_d, used_t, pairs = set(), set(), []
    for _, i, j in cands:
        if i not in used_d and j not in used_t:
            used_d.add(i)
            used_t.add(j)
            pairs.append((int(detected[i]), int(truth[j])))
    pairs.sort()
    tp = len(pairs)
    return PeakMatchResult(TP=tp, FP=len(detected) - tp, FN=len(truth) - tp, pairs=pairs)


def der(m: PeakMatchResult) -> float:
    """(FP + FN) / TP in percent; NaN when TP is zero."""
    if m.TP == 0:
        return UNDEFINED
    return 100.0 * (m.FP + m.FN) / m.TP


def ppr(m: PeakMatchResult) -> float:
    """TP / (TP + FP) in percent; NaN when nothing was detected."""
    if m.TP + m.FP == 0:
        return UNDEFINED
    return 100.0 * m.TP / (m.TP + m.FP)
