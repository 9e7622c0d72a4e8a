"""Proxy energy accounting over one-bit adder evaluations.

Energy is linear in the number of cell evaluations: each evaluation of a
model costs ``cost(model)`` units, independent of switching activity.  The
baseline prices the same workload as if every cell were exact.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError


class EnergyTrace:
    """Per-model counters of one-bit full-adder evaluations."""

    def __init__(self, counts=None):
        self.counts = Counter(counts or {})

    def record(self, model_name: str, n: int = 1):
        if n < 0:
            raise ValueError("evaluation counts only increase")
        if n:
            self.counts[model_name] += n

    def merge(self, other: "EnergyTrace"):
        self.counts.update(other.counts)
        return self

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __eq__(self, other):
        return isinstance(other, EnergyTrace) and dict(self.counts) == dict(other.counts)

    def __repr__(self):
        return f"EnergyTrace({dict(sorted(self.counts.items()))})"


@dataclass(frozen=True)
class EnergyReport:
    total_cost: float
    baseline_cost: float

    @property
    def savings_pct(self) -> float:
        if self.baseline_cost == 0:
            return 0.0
        return 100.0 * (1.0 - self.total_cost / self.baseline_cost)


def _cost_of(costs, name):
    try:
        return costs[name]
    except KeyError:
        raise ConfigError(f"no cost known for adder model {name!r}") from None


def estimate_energy(trace: EnergyTrace, costs, exact_name: str = "exact") -> EnergyReport:
    """Price ``trace`` with ``costs`` (model name -> cost, or a model library)."""
    costs = {name: getattr(c, "cost", c) for name, c in costs.items()}
    total = 0.0
    for name, n in sorted(trace.counts.items()):
        total += n * _cost_of(costs, name)
    baseline = trace.total * _cost_of(costs, exact_name) if trace.total else 0.0
    return EnergyReport(total, baseline)


def savings_curve(reports):
    """Flatten ``{(model, pct): EnergyReport}`` into rows sorted by model, pct."""
    rows = []
    for (model, pct), rep in sorted(reports.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        rows.append({
            "model": model,
            "approx_pct": pct,
            "energy_total": rep.total_cost,
            "energy_baseline": rep.baseline_cost,
            "energy_savings_pct": rep.savings_pct,
        })
    return rows


def calibrate_cost_ratio(target_savings_pct: float, width: int, approx_bits: int) -> float:
    """Cost ratio approx/exact giving ``target_savings_pct`` when ``approx_bits``
    of every ``width``-bit addition run on the approximate cell."""
    if not 0 < approx_bits <= width:
        raise ConfigError("need at least one approximate cell to calibrate against")
    ratio = 1.0 - (target_savings_pct / 100.0) * width / approx_bits
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(
            f"{target_savings_pct}% savings unreachable with {approx_bits}/{width} "
            "approximate cells and a non-negative cost")
    return ratio
