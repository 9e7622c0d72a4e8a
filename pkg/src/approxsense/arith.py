"""Bit-accurate exact and approximate full adders in ripple-carry chains.

A multi-bit adder of width ``W`` uses an approximate one-bit model for its
``k`` least significant cells and the exact full adder above them.  The carry
ripples through every cell, including across the approximate/exact boundary;
the carry out of the top cell is discarded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .energy import EnergyTrace
from .errors import ConfigError
from .fixedpoint import FxWord

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

GATES = {
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
    "NAND": lambda a, b: 1 - (a & b),
    "NOR": lambda a, b: 1 - (a | b),
    "XNOR": lambda a, b: 1 - (a ^ b),
    "NOT": lambda a: 1 - a,
}

INPUT_ROWS = [((i >> 2) & 1, (i >> 1) & 1, i & 1) for i in range(8)]


@dataclass(frozen=True)
class Gate:
    out: str
    kind: str
    inputs: tuple

    def __post_init__(self):
        if self.kind not in GATES:
            raise ConfigError(f"unknown gate kind {self.kind!r}")
        arity = 1 if self.kind == "NOT" else 2
        if len(self.inputs) != arity:
            raise ConfigError(f"{self.kind} gate {self.out!r} takes {arity} inputs")


def eval_netlist(gates, outputs, a, b, cin):
    signals = {"a": a, "b": b, "cin": cin}
    for g in gates:
        try:
            args = [signals[i] for i in g.inputs]
        except KeyError as e:
            raise ConfigError(f"gate {g.out!r} reads undefined signal {e.args[0]!r}") from None
        signals[g.out] = GATES[g.kind](*args)
    return signals[outputs["sum"]], signals[outputs["cout"]]


@dataclass(frozen=True)
class FullAdderModel:
    """One-bit adder: truth table, optional gate netlist, and proxy cost.

    ``table[i]`` is ``(sum, cout)`` for inputs ``(a, b, cin)`` with
    ``i = 4a + 2b + cin``.
    """

    name: str
    table: tuple
    netlist: tuple | None = None
    outputs: dict | None = field(default=None, hash=False)
    cost: float = 1.0
    transistor_count: int | None = None

    def __post_init__(self):
        table = tuple(tuple(int(v) for v in row) for row in self.table)
        if len(table) != 8 or any(len(r) != 2 or set(r) - {0, 1} for r in table):
            raise ConfigError(f"model {self.name!r}: table needs 8 rows of two bits")
        object.__setattr__(self, "table", table)
        if self.cost < 0:
            raise ConfigError(f"model {self.name!r}: negative cost")
        if self.netlist is not None:
            outputs = self.outputs or {"sum": "sum", "cout": "cout"}
            object.__setattr__(self, "outputs", dict(outputs))
            mismatch = [row for row, want in zip(INPUT_ROWS, table)
                        if eval_netlist(self.netlist, outputs, *row) != want]
            if mismatch:
                raise ConfigError(f"model {self.name!r}: netlist disagrees with table "
                                  f"on inputs {mismatch}")
        if self.name == "exact" and table != EXACT_TABLE:
            raise ConfigError("the model named 'exact' must be a true full adder")

    def eval_netlist(self, a, b, cin):
        if self.netlist is None:
            raise ConfigError(f"model {self.name!r} has no netlist")
        return eval_netlist(self.netlist, self.outputs, a, b, cin)

    @property
    def sum_bits(self) -> np.ndarray:
        return np.array([r[0] for r in self.table], dtype=np.uint64)

    @property
    def cout_bits(self) -> np.ndarray:
        return np.array([r[1] for r in self.table], dtype=np.uint64)

    @property
    def is_exact(self) -> bool:
        return self.table == EXACT_TABLE


EXACT_TABLE = tuple(((a ^ b ^ c), (a & b) | (a & c) | (b & c)) for a, b, c in INPUT_ROWS)
EXACT = FullAdderModel("exact", EXACT_TABLE, cost=24.0, transistor_count=24)


def fa_eval(model: FullAdderModel, a: int, b: int, cin: int):
    return model.table[(a << 2) | (b << 1) | cin]


def _model_from_dict(d) -> FullAdderModel:
    netlist = d.get("netlist")
    if netlist is not None:
        netlist = tuple(Gate(g["out"], g["gate"].upper(), tuple(g["in"])) for g in netlist)
    tc = d.get("transistor_count")
    cost = d.get("cost", tc)
    if cost is None:
        raise ConfigError(f"model {d.get('name')!r}: need cost or transistor_count")
    return FullAdderModel(name=d["name"], table=d["table"], netlist=netlist,
                          outputs=d.get("outputs"), cost=float(cost), transistor_count=tc)


def load_library(path=None) -> dict:
    """Read an adder model library; the packaged one when ``path`` is None."""
    if path is None:
        text = resources.files("approxsense.data").joinpath("adders.toml").read_text()
    else:
        text = Path(path).read_text()
    models = {}
    for d in tomllib.loads(text).get("model", []):
        m = _model_from_dict(d)
        if m.name in models:
            raise ConfigError(f"duplicate adder model {m.name!r}")
        models[m.name] = m
    if "exact" not in models:
        raise ConfigError("adder library must define the 'exact' model")
    return models


@dataclass(frozen=True)
class AdderConfig:
    model: FullAdderModel
    approx_bits: int
    width: int
    exact: FullAdderModel = EXACT

    def __post_init__(self):
        if not 1 <= self.width <= 64:
            raise ConfigError(f"adder width {self.width} outside [1, 64]")
        if not 0 <= self.approx_bits <= self.width:
            raise ConfigError(f"approx_bits {self.approx_bits} outside [0, {self.width}]")
        if not self.exact.is_exact:
            raise ConfigError("upper cells must use an exact full adder")


def approx_fraction_to_bits(pct: float, width: int) -> int:
    if not 0 <= pct <= 100:
        raise ConfigError(f"approximation percentage {pct} outside [0, 100]")
    # integer arithmetic where possible so 40% of 40 bits is exactly 16
    return int(math.floor(pct * width / 100 + 1e-9))


def _to_signed(u: np.ndarray, width: int) -> np.ndarray:
    if width == 64:
        return u.view(np.int64)
    s = u.astype(np.int64)
    return np.where(s >= (1 << (width - 1)), s - (1 << width), s)


def rca_add_raw(cfg: AdderConfig, x, y, trace: EnergyTrace | None = None) -> np.ndarray:
    """Vectorized ripple-carry addition of raw two's-complement words.

    ``x`` and ``y`` are broadcastable integer arrays holding signed raws of
    ``cfg.width`` bits.  Returns signed int64 raws.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    W, k = cfg.width, cfg.approx_bits
    mask = np.uint64((1 << W) - 1) if W < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    xu = x.astype(np.uint64) & mask
    yu = y.astype(np.uint64) & mask
    xu, yu = np.broadcast_arrays(xu, yu)
    n_ops = xu.size

    out = np.zeros(xu.shape, dtype=np.uint64)
    carry = np.zeros(xu.shape, dtype=np.uint64)
    one = np.uint64(1)
    if k:
        sum_t, cout_t = cfg.model.sum_bits, cfg.model.cout_bits
        for i in range(k):
            sh = np.uint64(i)
            idx = (((xu >> sh) & one) << np.uint64(2)) | (((yu >> sh) & one) << one) | carry
            out |= sum_t[idx] << sh
            carry = cout_t[idx]
    if k < W:
        # exact cells above the boundary: a ripple of true full adders is
        # integer addition of the upper slices plus the incoming carry
        sh = np.uint64(k)
        hi = (xu >> sh) + (yu >> sh) + carry
        out |= hi << sh
        out &= mask
    if trace is not None:
        trace.record(cfg.model.name, k * n_ops)
        trace.record(cfg.exact.name, (W - k) * n_ops)
    return _to_signed(out, W)


def rca_add(cfg: AdderConfig, x: FxWord, y: FxWord, trace: EnergyTrace | None = None) -> FxWord:
    if x.fmt != y.fmt:
        raise ConfigError(f"operand formats differ: {x.fmt} vs {y.fmt}")
    if x.fmt.width != cfg.width:
        raise ConfigError(f"operand width {x.fmt.width} != adder width {cfg.width}")
    raw = rca_add_raw(cfg, np.array([x.raw]), np.array([y.raw]), trace)
    return FxWord(int(raw[0]), x.fmt)


def _wrapped_distance(a: np.ndarray, b: np.ndarray, width: int) -> np.ndarray:
    if width > 62:
        mod = 1 << width
        return np.array([min((int(p) - int(q)) % mod, (int(q) - int(p)) % mod)
                         for p, q in zip(a, b)], dtype=float)
    mod = np.int64(1 << width)
    d = (a - b) % mod
    return np.minimum(d, mod - d).astype(float)


def adder_error_metrics(model: FullAdderModel, width: int, approx_bits: int,
                        samples: int = 10**6, seed: int = 0) -> dict:
    """Error rate and error distances of a mixed ripple-carry adder.

    Exhaustive over all ``4**width`` operand pairs for ``width <= 12``,
    otherwise over ``samples`` seeded uniform pairs.  Distances are in raw
    integer units, measured modulo ``2**width`` (nearest wrap).
    """
    cfg = AdderConfig(model, approx_bits, width)
    if width <= 12:
        vals = np.arange(1 << width, dtype=np.int64)
        x, y = np.meshgrid(vals, vals, indexing="ij")
        x, y = x.ravel(), y.ravel()
    else:
        rng = np.random.default_rng(seed)
        # raw bit patterns; rca_add_raw masks them to the adder width
        x = rng.integers(0, 2**64, size=samples, dtype=np.uint64).view(np.int64)
        y = rng.integers(0, 2**64, size=samples, dtype=np.uint64).view(np.int64)
    approx = rca_add_raw(cfg, x, y)
    exact = rca_add_raw(AdderConfig(EXACT, 0, width), x, y)
    ed = _wrapped_distance(approx, exact, width)
    return {
        "error_rate": float(np.mean(approx != exact)),
        "mean_error_distance": float(ed.mean()),
        "max_error_distance": float(ed.max()),
    }
