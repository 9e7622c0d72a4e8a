"""Additive white Gaussian noise channel.

Gaussian variates come from the Box-Muller transform applied to uniform
doubles of a PCG64 generator seeded with the trial seed, so a given
``(seed, length, variance)`` always yields the same noise vector.  Parallel
trials derive their seeds with :func:`split_seed` (numpy ``SeedSequence``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

INJECTION_POINTS = ("measurements", "input_signal")


@dataclass(frozen=True)
class NoiseSpec:
    variance: float = 4e-4
    seed: int = 0
    injection_point: str = "measurements"

    def __post_init__(self):
        if not self.variance >= 0:
            raise ConfigError(f"noise variance must be >= 0, got {self.variance}")
        if self.injection_point not in INJECTION_POINTS:
            raise ConfigError(f"injection_point must be one of {INJECTION_POINTS}")


def split_seed(*keys: int) -> int:
    """Deterministic child seed for a tuple of integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def standard_normal(n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = rad * np.cos(2 * np.pi * u2)
    z[1::2] = rad * np.sin(2 * np.pi * u2)
    return z[:n]


def add_awgn(v, spec: NoiseSpec) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if spec.variance == 0:
        return v.copy()
    return v + np.sqrt(spec.variance) * standard_normal(v.size, spec.seed).reshape(v.shape)


def noise_sweep(x, variances, pipeline):
    """Run ``pipeline(x, NoiseSpec-variance)`` once per variance.

    ``pipeline`` is any callable ``(x, variance) -> row``; the harness passes
    one bound to an exact-adder configuration.  Rows come back in input order.
    """
    return [pipeline(x, float(var)) for var in variances]
