"""First-order OHAM trial family and least-squares tuning of its control parameters.

The trial is::

    x(t) = [(C1 t^2 + A) cos wt + (C2 t^2 + C3 t - (w/l) A) sin wt] e^{-l t}
         + {[C4 t^2 + D t] cos 3wt + (C5 t^2 + C6 t) sin 3wt + C7} e^{-3 l t}
         - C7 cos wt

with ``D = v0 + A (w^2 + l^2) / l + 3 l C7`` so that ``x(0) = A`` and
``x'(0) = v0`` hold for every parameter draw.  The control parameters
``C1..C7`` together with ``l`` (decay) and ``w`` (frequency) are chosen to
minimize the integrated squared residual over the interval.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize as sp_optimize

from .etp import EtpExpression, EtpTerm, Phase
from .system import DamperParams, MemoryForcing, ResidualEvaluator

logger = logging.getLogger(__name__)

LAMBDA_BOUNDS = (1e-3, 5.0)
OMEGA_BOUNDS = (1e-2, 10.0)
N_CONTROL = 7


@dataclass(frozen=True)
class TrialSolution:
    A: float
    v0: float
    lam: float
    omega: float
    C: tuple[float, ...] = (0.0,) * N_CONTROL

    def __post_init__(self):
        if len(self.C) != N_CONTROL:
            raise ValueError(f"expected {N_CONTROL} control parameters, got {len(self.C)}")
        object.__setattr__(self, "C", tuple(float(c) for c in self.C))

    @property
    def vector(self) -> np.ndarray:
        """Optimization vector ``(C1..C7, lambda, omega)``."""
        return np.array([*self.C, self.lam, self.omega])

    def with_vector(self, vec) -> "TrialSolution":
        vec = np.asarray(vec, dtype=float)
        return replace(self, C=tuple(vec[:N_CONTROL]), lam=float(vec[N_CONTROL]), omega=float(vec[N_CONTROL + 1]))


def ic_coefficient(ts: TrialSolution) -> float:
    """Coefficient of ``t cos(3 w t) e^{-3 l t}`` that makes ``x'(0) = v0``."""
    return ts.v0 + ts.A * (ts.omega**2 + ts.lam**2) / ts.lam + 3.0 * ts.lam * ts.C[6]


def build_trial(ts: TrialSolution) -> EtpExpression:
    lam, w = ts.lam, ts.omega
    if not lam > 0 or not w > 0:
        raise ValueError(f"lambda and omega must be positive, got lambda={lam}, omega={w}")
    C1, C2, C3, C4, C5, C6, C7 = ts.C
    A = ts.A
    D = ic_coefficient(ts)
    cos, sin = Phase.COS, Phase.SIN
    return EtpExpression(
        (
            EtpTerm(C1, 2, -lam, w, cos),
            EtpTerm(A, 0, -lam, w, cos),
            EtpTerm(C2, 2, -lam, w, sin),
            EtpTerm(C3, 1, -lam, w, sin),
            EtpTerm(-w / lam * A, 0, -lam, w, sin),
            EtpTerm(C4, 2, -3 * lam, 3 * w, cos),
            EtpTerm(D, 1, -3 * lam, 3 * w, cos),
            EtpTerm(C5, 2, -3 * lam, 3 * w, sin),
            EtpTerm(C6, 1, -3 * lam, 3 * w, sin),
            EtpTerm(C7, 0, -3 * lam, 0.0, cos),
            EtpTerm(-C7, 0, 0.0, w, cos),
        )
    )


@dataclass(frozen=True)
class ObjectiveSpec:
    t_lo: float
    t_hi: float
    nodes: int = 701
    memory_forcing: MemoryForcing | None = None

    def __post_init__(self):
        if not self.t_hi > self.t_lo:
            raise ValueError(f"empty interval [{self.t_lo}, {self.t_hi}]")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError(f"composite Simpson needs an odd node count >= 3, got {self.nodes}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.t_lo, self.t_hi, self.nodes)

    @property
    def weights(self) -> np.ndarray:
        h = (self.t_hi - self.t_lo) / (self.nodes - 1)
        w = np.ones(self.nodes)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0


class Method(str, enum.Enum):
    NELDER_MEAD = "nelder-mead"
    LM_FINITE_DIFF = "lm"


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method = Method.NELDER_MEAD
    max_evals: int = 20000
    restarts: int = 5
    tolerance: float = 1e-10
    seed: int = 0
    perturbation: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.max_evals <= 0:
            raise ValueError("max_evals must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


def residual_on_grid(params: DamperParams, ts: TrialSolution, spec: ObjectiveSpec) -> np.ndarray:
    return ResidualEvaluator(params, build_trial(ts), spec.memory_forcing)(spec.grid)


def objective(params: DamperParams, ts: TrialSolution, spec: ObjectiveSpec) -> float:
    """Composite-Simpson value of the integrated squared residual over ``spec``'s interval."""
    r = residual_on_grid(params, ts, spec)
    return float(np.dot(spec.weights, r * r))


def initial_guess(params: DamperParams, A: float | None = None, v0: float | None = None) -> TrialSolution:
    """Default starting trial.

    ``lambda0 = c mu / (1 + mu)`` and ``omega0 = sqrt(1 + 3 alpha A^2 / 4)``
    (harmonic balance of the cubic term), both clipped to the search box,
    with all control parameters zero.
    """
    A = params.A if A is None else A
    v0 = params.v0 if v0 is None else v0
    lam = float(np.clip(params.c * params.mu / (1.0 + params.mu), *LAMBDA_BOUNDS))
    omega = float(np.clip(math.sqrt(1.0 + 0.75 * params.alpha * A * A), *OMEGA_BOUNDS))
    return TrialSolution(A=A, v0=v0, lam=lam, omega=omega)


@dataclass
class OptimizeResult:
    best: TrialSolution
    J: float
    evals: int
    converged: bool
    message: str = ""
    history: list[float] = field(default_factory=list)


def _clip_box(vec: np.ndarray) -> np.ndarray:
    vec = np.array(vec, dtype=float)
    vec[N_CONTROL] = np.clip(vec[N_CONTROL], *LAMBDA_BOUNDS)
    vec[N_CONTROL + 1] = np.clip(vec[N_CONTROL + 1], *OMEGA_BOUNDS)
    return vec


class _BudgetExhausted(Exception):
    pass


class _Counter:
    """Objective wrapper that enforces the evaluation budget and keeps the best point seen."""

    def __init__(self, params, template: TrialSolution, spec: ObjectiveSpec, max_evals: int):
        self.params = params
        self.template = template
        self.spec = spec
        self.sqrt_w = np.sqrt(spec.weights)
        self.max_evals = max_evals
        self.evals = 0
        self.best_J = math.inf
        self.best_vec = None

    def residuals(self, vec) -> np.ndarray:
        if self.evals >= self.max_evals:
            raise _BudgetExhausted
        vec = _clip_box(vec)
        r = self.sqrt_w * residual_on_grid(self.params, self.template.with_vector(vec), self.spec)
        J = float(np.dot(r, r))
        self.evals += 1
        if not math.isfinite(J):
            return np.full_like(r, 1e100)
        if J < self.best_J:
            self.best_J, self.best_vec = J, vec
        return r

    def __call__(self, vec) -> float:
        r = self.residuals(vec)
        return float(np.dot(r, r))


def _run_local(fun: _Counter, x0: np.ndarray, cfg: OptimizerConfig) -> None:
    try:
        if cfg.method is Method.NELDER_MEAD:
            sp_optimize.minimize(
                fun,
                x0,
                method="Nelder-Mead",
                bounds=[(None, None)] * N_CONTROL + [LAMBDA_BOUNDS, OMEGA_BOUNDS],
                options={"maxfev": fun.max_evals, "xatol": 1e-6, "fatol": cfg.tolerance, "adaptive": True},
            )
        else:
            lo = np.array([-np.inf] * N_CONTROL + [LAMBDA_BOUNDS[0], OMEGA_BOUNDS[0]])
            hi = np.array([np.inf] * N_CONTROL + [LAMBDA_BOUNDS[1], OMEGA_BOUNDS[1]])
            # bounded problems need the trust-region variant of Levenberg-Marquardt;
            # C and (lambda, omega) differ in scale by orders of magnitude
            sp_optimize.least_squares(
                fun.residuals,
                np.clip(x0, lo, hi),
                method="trf",
                bounds=(lo, hi),
                jac="2-point",
                x_scale="jac",
                max_nfev=fun.max_evals,
                ftol=1e-15,
                xtol=1e-15,
                gtol=1e-12,
            )
    except _BudgetExhausted:
        pass


def optimize(
    params: DamperParams,
    init: TrialSolution,
    spec: ObjectiveSpec,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> OptimizeResult:
    """Minimize the integrated squared residual over ``(C1..C7, lambda, omega)``.

    A local search starts from ``init``; each restart starts from the best
    point so far, perturbed by a generator seeded with ``cfg.seed``, and the
    loop stops once a restart improves ``J`` by no more than
    ``cfg.tolerance``.  The returned trial is never worse than ``init``.
    ``converged`` is False only when the evaluation budget ran out.
    """
    fun = _Counter(params, init, spec, cfg.max_evals)
    x0 = _clip_box(init.vector)
    fun(x0)
    if fun.best_vec is None:
        raise ArithmeticError("objective is not finite at the initial trial")
    rng = np.random.default_rng(cfg.seed)
    history = [fun.best_J]
    start = x0
    for attempt in range(cfg.restarts + 1):
        if fun.evals >= cfg.max_evals:
            break
        before = fun.best_J
        _run_local(fun, start, cfg)
        history.append(fun.best_J)
        logger.debug("attempt %d: J=%.6e (evals=%d)", attempt, fun.best_J, fun.evals)
        if attempt > 0 and before - fun.best_J <= cfg.tolerance:
            break
        scale = cfg.perturbation * (1.0 + np.abs(fun.best_vec))
        start = _clip_box(fun.best_vec + scale * rng.standard_normal(fun.best_vec.size))
    converged = fun.evals < cfg.max_evals
    return OptimizeResult(
        best=init.with_vector(fun.best_vec),
        J=fun.best_J,
        evals=fun.evals,
        converged=converged,
        message="converged" if converged else "evaluation budget exhausted",
        history=history,
    )
