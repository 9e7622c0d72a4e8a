import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxsense.errors import InputError
from approxsense.metrics import (SNR_CAP_DB, PeakMatchResult, der, detect_rpeaks, match_peaks, ppr, prd,
                                 prd_pct, snr_db)

FS = 360


def bump_train(centers, n, width=6.0, amps=None):
    t = np.arange(n)
    amps = np.ones(len(centers)) if amps is None else amps
    return sum(a * np.exp(-0.5 * ((t - c) / width) ** 2) for c, a in zip(centers, amps))


def test_snr_examples(rng):
    x = rng.normal(size=100)
    assert snr_db(x, x) == SNR_CAP_DB
    e = rng.normal(size=100)
    e *= 0.1 * np.linalg.norm(x) / np.linalg.norm(e)
    assert snr_db(x, x + e) == pytest.approx(20.0)
    assert snr_db(x, np.zeros(100)) == pytest.approx(0.0)
    with pytest.raises(InputError):
        snr_db(np.zeros(4), np.ones(4))
    with pytest.raises(InputError):
        snr_db(np.ones(4), np.ones(5))


def test_prd_examples(rng):
    x = rng.normal(size=100) + 3
    assert prd(x, x) == 0.0
    assert prd(x, np.full(100, x.mean())) == pytest.approx(1.0)
    z = x - x.mean()
    assert prd(z, np.zeros(100)) == pytest.approx(1.0)
    assert prd_pct(z, np.zeros(100)) == pytest.approx(100.0)
    with pytest.raises(InputError):
        prd(np.ones(5), np.zeros(5))


def test_snr_prd_duality(rng):
    x = rng.normal(size=64)
    d = rng.normal(size=64)
    scales = np.linspace(0.01, 2, 20)
    s = [snr_db(x, x + c * d) for c in scales]
    q = [prd(x, x + c * d) for c in scales]
    assert np.all(np.diff(q) > 0) and np.all(np.diff(s) < 0)


def test_flat_signal_has_no_peaks():
    assert detect_rpeaks(np.zeros(1000), FS).size == 0
    assert detect_rpeaks(np.ones(1000), FS).size == 0


def test_bump_train_centers():
    centers = np.arange(180, 10 * FS, FS) + 0.3
    x = bump_train(centers, 10 * FS)
    got = detect_rpeaks(x, FS)
    assert len(got) == len(centers)
    assert np.all(np.abs(got - centers) <= 2)


def test_refractory_keeps_larger():
    x = bump_train([500, 536], 1200, width=4, amps=[0.8, 1.0])
    np.testing.assert_array_equal(detect_rpeaks(x, FS), [536])


def test_shift_equivariance():
    centers = np.arange(400, 3000, 330)
    x = bump_train(centers, 3600)
    base = detect_rpeaks(x, FS)
    for s in (1, 7, 50):
        np.testing.assert_array_equal(detect_rpeaks(np.roll(x, s), FS), base + s)


def test_match_examples():
    t = [100, 460, 820]
    m = match_peaks(t, t)
    assert (m.TP, m.FP, m.FN) == (3, 0, 0)
    m = match_peaks([], t)
    assert (m.TP, m.FP, m.FN) == (0, 0, 3)
    m = match_peaks([100 + 17], [100], tol=18)
    assert m.TP == 1 and m.pairs == [(117, 100)]
    assert match_peaks([100 + 19], [100], tol=18).TP == 0
    # nearest first: the closer truth wins the contested detection
    m = match_peaks([110], [100, 112], tol=18)
    assert m.pairs == [(110, 112)] and m.FN == 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 2000), max_size=30, unique=True),
       st.lists(st.integers(0, 2000), max_size=30, unique=True),
       st.integers(0, 40))
def test_match_conservation(det, truth, tol):
    det, truth = sorted(det), sorted(truth)
    m = match_peaks(det, truth, tol)
    assert m.TP + m.FN == len(truth)
    assert m.TP + m.FP == len(det)
    assert len({t for _, t in m.pairs}) == m.TP == len({d for d, _ in m.pairs})
    assert all(abs(d - t) <= tol for d, t in m.pairs)


def test_der_ppr_examples():
    assert der(PeakMatchResult(10, 0, 0)) == 0.0
    assert der(PeakMatchResult(10, 1, 1)) == pytest.approx(20.0)
    assert math.isnan(der(PeakMatchResult(0, 3, 2)))
    assert ppr(PeakMatchResult(8, 2, 0)) == pytest.approx(80.0)
    assert ppr(PeakMatchResult(5, 0, 1)) == 100.0
    assert ppr(PeakMatchResult(0, 4, 0)) == 0.0
    assert math.isnan(ppr(PeakMatchResult(0, 0, 3)))
