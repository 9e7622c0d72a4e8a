"""Experiment configuration: one TOML file with per-stage sections.

Sections: ``[record]``, ``[sensing]``, ``[adders]``, ``[noise]``, ``[recon]``
and ``[sweep]``.  Every key has a default, so an empty file is a valid
configuration (10 s piecewise-linear phantom, exact adders, channel noise of
variance 4e-4).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..fixedpoint import ACQ_FORMAT, RECON_FORMAT, FxFormat
from ..recon import ReconParams

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


RECORD_SOURCES = ("phantom", "synthetic", "csv", "mit212")


@dataclass
class RecordConfig:
    source: str = "phantom"
    path: str | None = None
    annotations: str | None = None
    fs: float = 360.0
    channel: int = 0
    n_samples: int | None = None
    duration_s: float = 10.0
    hr_bpm: float = 75.0
    seed: int = 0
    gain: float = 200.0
    baseline: int = 1024
    match_tol: int = 18


@dataclass
class SensingConfig:
    M: int = 128
    N: int = 256
    r: int = 2
    seed: int = 0
    integer_bits: int = ACQ_FORMAT.integer_bits
    fractional_bits: int = ACQ_FORMAT.fractional_bits

    @property
    def fmt(self) -> FxFormat:
        return FxFormat(self.integer_bits, self.fractional_bits)


@dataclass
class AddersConfig:
    library: str | None = None
    model: str = "exact"
    approx_pct: float = 0.0


@dataclass
class NoiseConfig:
    variance: float = 4e-4
    seed: int = 0
    injection_point: str = "measurements"


@dataclass
class ReconConfig:
    p: float = 0.9
    eps1: float = 1.0
    lambda1: float = 1.0
    T: int = 50
    delta: float = 1e-5
    E_t: float = 1e-15
    L_b: int = 15
    r_solver: float = 4.0
    integer_bits: int = RECON_FORMAT.integer_bits
    fractional_bits: int = RECON_FORMAT.fractional_bits

    @property
    def params(self) -> ReconParams:
        return ReconParams(self.p, self.eps1, self.lambda1, self.T, self.delta,
                           self.E_t, self.L_b, self.r_solver)

    @property
    def fmt(self) -> FxFormat:
        return FxFormat(self.integer_bits, self.fractional_bits)


@dataclass
class SweepConfig:
    models: list = field(default_factory=lambda: [f"lpaa{i}" for i in range(1, 8)])
    pcts: list = field(default_factory=lambda: [0, 20, 40, 60, 80])
    seeds: list = field(default_factory=lambda: [0])
    variances: list = field(default_factory=lambda: [0.0, 1e-4, 4e-4, 1e-3, 4e-3, 1e-2, 4e-2])
    jobs: int = 1
    plots: bool = True


@dataclass
class ExperimentConfig:
    record: RecordConfig = field(default_factory=RecordConfig)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    adders: AddersConfig = field(default_factory=AddersConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    recon: ReconConfig = field(default_factory=ReconConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def validate(self):
        if not 0 <= self.adders.approx_pct <= 100:
            raise ConfigError("approx_pct must lie in [0, 100]")
        if self.record.source not in RECORD_SOURCES:
            raise ConfigError(f"record source must be one of {RECORD_SOURCES}")
        # format and solver constructors carry their own range checks
        _ = (self.sensing.fmt, self.recon.fmt, self.recon.params)
        if self.sensing.M >= self.sensing.N:
            raise ConfigError("sensing needs M < N")
        return self

    def replace(self, **sections) -> "ExperimentConfig":
        """Copy with per-section overrides: ``cfg.replace(adders={"model": "lpaa7"})``."""
        new = {}
        for f in dataclasses.fields(self):
            sec = getattr(self, f.name)
            new[f.name] = dataclasses.replace(sec, **sections.get(f.name, {}))
        return ExperimentConfig(**new).validate()


def _section(cls, data, name):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(d: dict) -> ExperimentConfig:
    sections = {f.name: f.default_factory for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(d) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kw = {name: _section(type(factory()), d.get(name, {}), name)
          for name, factory in sections.items()}
    return ExperimentConfig(**kw).validate()


def parse_override(text: str):
    """``section.key=value`` with ``value`` parsed as a TOML value."""
    try:
        lhs, rhs = text.split("=", 1)
        section, key = lhs.strip().split(".", 1)
    except ValueError:
        raise ConfigError(f"override {text!r} is not section.key=value") from None
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()  # bare strings need no quotes on the command line
    return section, key.strip(), value


def load_config(path=None, overrides=()) -> ExperimentConfig:
    d = {}
    if path is not None:
        d = tomllib.loads(Path(path).read_text())
        base = Path(path).parent
        # relative file references resolve against the config's directory
        rec = d.get("record", {})
        for key in ("path", "annotations"):
            if rec.get(key) and not Path(rec[key]).is_absolute():
                rec[key] = str(base / rec[key])
        lib = d.get("adders", {}).get("library")
        if lib and not Path(lib).is_absolute():
            d["adders"]["library"] = str(base / lib)
    for text in overrides:
        section, key, value = parse_override(text)
        d.setdefault(section, {})[key] = value
    return config_from_dict(d)
