"""Bernoulli sensing plans and sparse-multiplier acquisition.

A plan stores, for each of the ``M`` measurement rows, the sorted column
indices of its ``r`` ones.  Acquisition never forms the ``M x N`` matrix: each
measurement is the chained sum of the selected samples, and every addition
runs on the configured ripple-carry adder.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arith import AdderConfig, rca_add_raw
from .energy import EnergyTrace
from .errors import ConfigError, FormatError
from .fixedpoint import FxVector

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True, eq=False)
class SensingPlan:
    M: int
    N: int
    r: int
    z: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64)
        if z.shape != (self.M * self.r,):
            raise ConfigError(f"z must hold M*r = {self.M * self.r} indices, got {z.shape}")
        if z.size and (z.min() < 0 or z.max() >= self.N):
            raise ConfigError("plan indices out of [0, N)")
        if self.r > 1 and np.any(np.diff(z.reshape(self.M, self.r), axis=1) <= 0):
            raise ConfigError("indices within a row must be strictly increasing")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def rows(self) -> np.ndarray:
        """``(M, r)`` view of the index vector."""
        return self.z.reshape(self.M, self.r)

    def dense(self) -> np.ndarray:
        phi = np.zeros((self.M, self.N))
        phi[np.repeat(np.arange(self.M), self.r), self.z] = 1.0
        return phi

    def apply(self, x) -> np.ndarray:
        """Real-valued ``Phi @ x``."""
        return np.asarray(x, dtype=float)[self.rows].sum(axis=1)

    def adjoint(self, y) -> np.ndarray:
        """Real-valued ``Phi.T @ y`` by scatter-add."""
        return np.bincount(self.z, weights=np.repeat(np.asarray(y, dtype=float), self.r),
                           minlength=self.N)

    def __eq__(self, other):
        return (isinstance(other, SensingPlan)
                and (self.M, self.N, self.r, self.seed) == (other.M, other.N, other.r, other.seed)
                and np.array_equal(self.z, other.z))

    def save(self, path):
        z = ", ".join(str(int(i)) for i in self.z)
        seed = "" if self.seed is None else f"seed = {int(self.seed)}\n"
        Path(path).write_text(f"M = {self.M}\nN = {self.N}\nr = {self.r}\n{seed}z = [{z}]\n")

    @classmethod
    def load(cls, path) -> "SensingPlan":
        try:
            d = tomllib.loads(Path(path).read_text())
            return cls(int(d["M"]), int(d["N"]), int(d["r"]), np.array(d["z"]), d.get("seed"))
        except (KeyError, tomllib.TOMLDecodeError) as e:
            raise FormatError(f"{path}: not a sensing plan ({e})") from None


def gen_bernoulli_plan(M: int, N: int, r: int = 2, seed: int = 0) -> SensingPlan:
    """Draw ``r`` distinct columns per row uniformly without replacement."""
    if M < 1 or N < 1 or r < 1:
        raise ConfigError("M, N and r must be positive")
    if r > N:
        raise ConfigError(f"cannot place r={r} ones in a row of length N={N}")
    rng = np.random.default_rng(seed)
    z = np.empty((M, r), dtype=np.int64)
    for k in range(M):
        z[k] = np.sort(rng.choice(N, size=r, replace=False))
    return SensingPlan(M, N, r, z.ravel(), seed)


def acquire(x: FxVector, plan: SensingPlan, adders: AdderConfig,
            trace: EnergyTrace | None = None) -> FxVector:
    """Compress one frame: ``y[k]`` chains ``r`` additions starting from zero.

    The running sum is always the adder's first operand and the next selected
    sample the second.
    """
    if len(x) != plan.N:
        raise ConfigError(f"frame length {len(x)} != plan N {plan.N}")
    if x.fmt.width != adders.width:
        raise ConfigError(f"frame width {x.fmt.width} != adder width {adders.width}")
    acc = np.zeros(plan.M, dtype=np.int64)
    rows = plan.rows
    for j in range(plan.r):
        acc = rca_add_raw(adders, acc, x.raw[rows[:, j]], trace)
    return FxVector(acc, x.fmt)
