"""Reconstruction by minimizing a smoothed lp penalty on second differences.

The solver minimizes

    f(x) = 0.5 * ||Phi x - y||^2 + lam * sum_i ((D2 x)_i^2 + eps^2)^(p/2)

with Polak-Ribiere (PR+) nonlinear conjugate gradient and Armijo
backtracking, under a continuation schedule that divides ``eps`` and ``lam``
by ``r_solver`` after every stage and warm-starts the next stage.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .sensing import SensingPlan

EPS_FLOOR = 1e-6
LAMBDA_FLOOR_FRACTION = 1e-4
ARMIJO_C = 1e-4
MAX_HALVINGS = 60


@dataclass(frozen=True)
class ReconParams:
    p: float = 0.9
    eps1: float = 1.0
    lambda1: float = 1.0
    T: int = 50
    delta: float = 1e-5
    E_t: float = 1e-15
    L_b: int = 15
    r_solver: float = 4.0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ConfigError(f"p must lie in (0, 1], got {self.p}")
        if self.T < 1 or self.L_b < 1:
            raise ConfigError("T and L_b must be at least 1")
        for name in ("eps1", "lambda1", "delta", "E_t", "r_solver"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


@dataclass
class ReconResult:
    x_star: np.ndarray
    objective_history: list = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    line_search_failures: int = 0
    eps_history: list = field(default_factory=list)


def second_diff(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 3:
        raise InputError("second difference needs at least 3 samples")
    return x[2:] - 2.0 * x[1:-1] + x[:-2]


def second_diff_adjoint(v, n: int) -> np.ndarray:
    """``D2.T @ v`` for a length-``n`` signal."""
    out = np.zeros(n)
    out[:-2] += v
    out[1:-1] -= 2.0 * v
    out[2:] += v
    return out


def smoothed_lp(v, p: float, eps: float) -> float:
    if not eps > 0:
        raise ConfigError("smoothing eps must be positive")
    v = np.asarray(v, dtype=float)
    return float(np.sum((v * v + eps * eps) ** (p / 2)))


def _check(x, y, plan):
    if np.shape(x) != (plan.N,) or np.shape(y) != (plan.M,):
        raise ConfigError(f"expected x of length {plan.N} and y of length {plan.M}")


def objective(x, y, plan: SensingPlan, p: float, eps: float, lam: float) -> float:
    _check(x, y, plan)
    res = plan.apply(x) - y
    return 0.5 * float(res @ res) + lam * smoothed_lp(second_diff(x), p, eps)


def gradient(x, y, plan: SensingPlan, p: float, eps: float, lam: float) -> np.ndarray:
    _check(x, y, plan)
    v = second_diff(x)
    w = v * (v * v + eps * eps) ** (p / 2 - 1)
    return plan.adjoint(plan.apply(x) - y) + lam * p * second_diff_adjoint(w, len(x))


class _Problem:
    """Objective and gradient sharing one pass over the data (no checks)."""

    def __init__(self, y, plan):
        self.y, self.rows, self.plan, self.n = y, plan.rows, plan, plan.N

    def value(self, x, p, eps, lam):
        res = x[self.rows].sum(axis=1) - self.y
        v = x[2:] - 2.0 * x[1:-1] + x[:-2]
        return 0.5 * (res @ res) + lam * np.sum((v * v + eps * eps) ** (p / 2))

    def curvature(self, x, d, p, eps, lam):
        """``d' H d`` for the quadratic majorizer of f at x (IRLS weights)."""
        pd = d[self.rows].sum(axis=1)
        v = x[2:] - 2.0 * x[1:-1] + x[:-2]
        dv = d[2:] - 2.0 * d[1:-1] + d[:-2]
        w = (v * v + eps * eps) ** (p / 2 - 1)
        return pd @ pd + lam * p * np.sum(w * dv * dv)

    def grad(self, x, p, eps, lam):
        res = x[self.rows].sum(axis=1) - self.y
        v = x[2:] - 2.0 * x[1:-1] + x[:-2]
        w = (lam * p) * v * (v * v + eps * eps) ** (p / 2 - 1)
        return self.plan.adjoint(res) + second_diff_adjoint(w, self.n)


def _cg_stage(prob, x, p, eps, lam, params, restart_every, step=1.0):
    """At most ``L_b`` PR+ iterations; returns (x, f, failed, last step)."""
    f = prob.value(x, p, eps, lam)
    g = prob.grad(x, p, eps, lam)
    d = -g
    for it in range(params.L_b):
        gg = g @ g
        if np.sqrt(gg) < params.E_t:
            break
        slope = g @ d
        if slope >= 0:
            d, slope = -g, -gg
        # first trial step minimizes the majorizing quadratic along d
        curv = prob.curvature(x, d, p, eps, lam)
        alpha = -slope / curv if curv > 0 else step
        for _ in range(MAX_HALVINGS):
            x_new = x + alpha * d
            f_new = prob.value(x_new, p, eps, lam)
            if f_new <= f + ARMIJO_C * alpha * slope:
                break
            alpha *= 0.5
        else:
            return x, f, True, step
        # next trial step starts a little above the accepted one
        step = min(2.0 * alpha, 1e6)
        g_new = prob.grad(x_new, p, eps, lam)
        beta = max(0.0, g_new @ (g_new - g) / gg)
        if (it + 1) % restart_every == 0:
            beta = 0.0
        d = -g_new + beta * d
        x, f, g = x_new, f_new, g_new
    return x, f, False, step


def reconstruct(y, plan: SensingPlan, params: ReconParams = ReconParams()) -> ReconResult:
    y = np.asarray(y, dtype=float)
    if y.shape != (plan.M,):
        raise ConfigError(f"expected {plan.M} measurements, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InputError("measurements contain non-finite values")
    prob = _Problem(y, plan)
    x = plan.adjoint(y)
    eps, lam = params.eps1, params.lambda1
    lam_floor = LAMBDA_FLOOR_FRACTION * params.lambda1
    result = ReconResult(x)
    f_prev = None
    step = 1.0
    for t in range(params.T):
        x, f, failed, step = _cg_stage(prob, x, params.p, eps, lam, params,
                                       restart_every=plan.N, step=step)
        result.line_search_failures += failed
        result.objective_history.append(float(f))
        result.eps_history.append(eps)
        result.iterations_used = t + 1
        if f_prev is not None and f_prev - f < params.delta * max(abs(f_prev), 1e-300):
            result.converged = True
            break
        if np.linalg.norm(prob.grad(x, params.p, eps, lam)) < params.E_t:
            result.converged = True
            break
        f_prev = f
        eps = max(eps / params.r_solver, EPS_FLOOR)
        lam = max(lam / params.r_solver, lam_floor)
    result.x_star = x
    return result
