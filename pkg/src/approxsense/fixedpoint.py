"""Two's-complement fixed-point formats with truncating quantization.

Words are stored as signed Python/numpy integers (``raw``) together with a
:class:`FxFormat`; the real value is ``raw * 2**-fractional_bits``.  Formats up
to 64 bits are supported so every raw value fits one machine word.
Dequantization of words wider than 53 bits rounds to the nearest double.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FxRangeError


@dataclass(frozen=True)
class FxFormat:
    integer_bits: int
    fractional_bits: int

    def __post_init__(self):
        if not 1 <= self.integer_bits <= 16:
            raise ConfigError(f"integer_bits must be in [1, 16], got {self.integer_bits}")
        if not 0 <= self.fractional_bits <= 64:
            raise ConfigError(f"fractional_bits must be in [0, 64], got {self.fractional_bits}")
        if self.width > 64:
            raise ConfigError(f"total width {self.width} exceeds 64 bits")

    @property
    def width(self) -> int:
        return self.integer_bits + self.fractional_bits

    @property
    def min_raw(self) -> int:
        return -(1 << (self.width - 1))

    @property
    def max_raw(self) -> int:
        return (1 << (self.width - 1)) - 1

    @property
    def lsb(self) -> float:
        return math.ldexp(1.0, -self.fractional_bits)

    @property
    def min_value(self) -> float:
        return -float(1 << (self.integer_bits - 1))

    @property
    def max_value(self) -> float:
        return math.ldexp(float(self.max_raw), -self.fractional_bits)

    def __str__(self):
        return f"Q{self.integer_bits}.{self.fractional_bits}"

    @classmethod
    def from_dict(cls, d) -> "FxFormat":
        return cls(int(d["integer_bits"]), int(d["fractional_bits"]))


# Acquisition and reconstruction word formats: 4 integer bits (sign included)
# cover the normalized signal and the r=2 row sums with headroom.
ACQ_FORMAT = FxFormat(4, 33)
RECON_FORMAT = FxFormat(4, 43)


@dataclass(frozen=True)
class FxWord:
    raw: int
    fmt: FxFormat

    def __post_init__(self):
        if not self.fmt.min_raw <= self.raw <= self.fmt.max_raw:
            raise ConfigError(f"raw {self.raw} does not fit {self.fmt.width} bits")

    @property
    def value(self) -> float:
        return dequantize(self)


def _in_range(v: float, fmt: FxFormat) -> bool:
    # upper bound is exclusive at max_value + lsb, since floor() truncates
    return fmt.min_value <= v < fmt.max_value + fmt.lsb


def quantize(v: float, fmt: FxFormat) -> FxWord:
    """Truncate ``v`` toward minus infinity onto the grid of ``fmt``."""
    v = float(v)
    if not math.isfinite(v) or not _in_range(v, fmt):
        raise FxRangeError(v, fmt)
    # ldexp is exact, floor of a double is exact
    return FxWord(math.floor(math.ldexp(v, fmt.fractional_bits)), fmt)


def dequantize(w: FxWord) -> float:
    return math.ldexp(float(w.raw), -w.fmt.fractional_bits)


@dataclass(eq=False)
class FxVector:
    """A vector of raw words sharing one format (int64 storage)."""

    raw: np.ndarray
    fmt: FxFormat

    def __len__(self):
        return len(self.raw)

    def values(self) -> np.ndarray:
        return dequantize_array(self.raw, self.fmt)

    def __getitem__(self, i) -> FxWord:
        return FxWord(int(self.raw[i]), self.fmt)


def quantize_array(v, fmt: FxFormat) -> FxVector:
    """Vectorized :func:`quantize`; raises on the first out-of-range element."""
    v = np.asarray(v, dtype=np.float64)
    bad = ~np.isfinite(v) | (v < fmt.min_value) | (v >= fmt.max_value + fmt.lsb)
    if np.any(bad):
        raise FxRangeError(float(v[np.argmax(bad)]), fmt)
    # v * 2**f is exact in binary floating point and stays below 2**63
    return FxVector(np.floor(np.ldexp(v, fmt.fractional_bits)).astype(np.int64), fmt)


def dequantize_array(raw, fmt: FxFormat) -> np.ndarray:
    return np.ldexp(np.asarray(raw, dtype=np.int64).astype(np.float64), -fmt.fractional_bits)


def requantize(v, fmt: FxFormat) -> np.ndarray:
    """Round-trip real values through ``fmt`` (truncation), clipping to range."""
    v = np.clip(np.asarray(v, dtype=np.float64), fmt.min_value, fmt.max_value)
    return quantize_array(v, fmt).values()
