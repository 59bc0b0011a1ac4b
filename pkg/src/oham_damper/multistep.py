"""Piecewise OHAM solution over consecutive time intervals.

Each step solves a local problem on ``[0, t_hi - t_lo]`` whose initial
displacement and velocity are the previous step's end values, so ``x`` and
``x'`` are continuous at every boundary.  With ``memory_carry`` the history
integral accumulated before the boundary enters the local residual as
``w(T) exp(-mu t')``, which makes the split of the convolution exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .etp import EtpExpression, evaluate
from .oham import (
    ObjectiveSpec,
    OptimizerConfig,
    TrialSolution,
    build_trial,
    initial_guess,
    optimize,
)
from .reference import OracleTrajectory, sample
from .system import DamperParams, MemoryForcing, ResidualEvaluator

logger = logging.getLogger(__name__)

BENCHMARK_BOUNDARIES = (0.0, 3.5, 7.0, 10.0)


@dataclass(frozen=True)
class StepPlan:
    boundaries: tuple[float, ...] = BENCHMARK_BOUNDARIES
    optimizer: OptimizerConfig | tuple[OptimizerConfig, ...] = OptimizerConfig()
    memory_carry: bool = True
    nodes_per_unit: float = 200.0

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        if len(b) < 2:
            raise ValueError("a plan needs at least one step (two boundaries)")
        if any(hi <= lo for lo, hi in zip(b[:-1], b[1:])):
            raise ValueError(f"boundaries must be strictly increasing, got {b}")
        object.__setattr__(self, "boundaries", b)
        if not isinstance(self.optimizer, OptimizerConfig):
            cfgs = tuple(self.optimizer)
            if len(cfgs) != self.n_steps:
                raise ValueError(f"got {len(cfgs)} optimizer configs for {self.n_steps} steps")
            object.__setattr__(self, "optimizer", cfgs)

    @classmethod
    def uniform(cls, t_end: float, steps: int, t_start: float = 0.0, **kwargs) -> "StepPlan":
        return cls(boundaries=tuple(np.linspace(t_start, t_end, steps + 1)), **kwargs)

    @property
    def n_steps(self) -> int:
        return len(self.boundaries) - 1

    def config_for(self, i: int) -> OptimizerConfig:
        if isinstance(self.optimizer, OptimizerConfig):
            return self.optimizer
        return self.optimizer[i]

    def nodes_for(self, length: float) -> int:
        n = max(3, int(math.ceil(length * self.nodes_per_unit)) + 1)
        return n if n % 2 else n + 1


@dataclass(frozen=True)
class EndState:
    x: float
    v: float
    w: float


@dataclass
class StepResult:
    t_lo: float
    t_hi: float
    trial: TrialSolution
    J: float
    expr: EtpExpression
    end_state: EndState
    w_in: float = 0.0
    converged: bool = True
    evals: int = 0

    @property
    def length(self) -> float:
        return self.t_hi - self.t_lo

    def neglected_forcing_bound(self, params: DamperParams, t_local: float = 0.5) -> float:
        """Bound on the history forcing ``|2c w_in| exp(-mu t')`` dropped when memory carry is off."""
        return abs(2.0 * params.c * self.w_in) * math.exp(-params.mu * t_local)


@dataclass
class PiecewiseSolution:
    params: DamperParams
    steps: list[StepResult] = field(default_factory=list)
    memory_carry: bool = True

    @property
    def t_start(self) -> float:
        return self.steps[0].t_lo

    @property
    def t_end(self) -> float:
        return self.steps[-1].t_hi

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.steps)

    def __call__(self, t):
        return evaluate_piecewise(self, t)[0]


def solve_multistep(
    params: DamperParams,
    plan: StepPlan = StepPlan(),
    init: TrialSolution | None = None,
) -> PiecewiseSolution:
    """Optimize the trial family step by step.

    Step 1 starts from ``init`` (default: :func:`~oham_damper.oham.initial_guess`);
    later steps warm-start from the previous optimum with the boundary state
    substituted for ``A`` and ``v0``.
    """
    sol = PiecewiseSolution(params=params, memory_carry=plan.memory_carry)
    A, v0, w_in = params.A, params.v0, 0.0
    prev: TrialSolution | None = None
    for i, (t_lo, t_hi) in enumerate(zip(plan.boundaries[:-1], plan.boundaries[1:])):
        length = t_hi - t_lo
        forcing = MemoryForcing(w_in) if plan.memory_carry and w_in != 0.0 else None
        spec = ObjectiveSpec(0.0, length, plan.nodes_for(length), forcing)
        if prev is None:
            start = init if init is not None else initial_guess(params, A, v0)
            start = TrialSolution(A, v0, start.lam, start.omega, start.C)
        else:
            start = TrialSolution(A, v0, prev.lam, prev.omega, prev.C)
        res = optimize(params, start, spec, plan.config_for(i))
        if not res.converged:
            logger.warning("step %d on [%g, %g]: %s", i + 1, t_lo, t_hi, res.message)
        ev = ResidualEvaluator(params, build_trial(res.best))
        x_end = evaluate(ev.x, length)
        v_end = evaluate(ev.dx, length)
        # full-history convolution state, carried whether or not the residual uses it
        w_end = evaluate(ev.w, length) + w_in * math.exp(-params.mu * length)
        probe = evaluate(ev.x, np.linspace(0.0, length, 101))
        if not (np.all(np.isfinite(probe)) and math.isfinite(v_end) and math.isfinite(w_end)):
            raise ArithmeticError(f"step {i + 1} on [{t_lo}, {t_hi}] produced a non-finite solution")
        sol.steps.append(
            StepResult(
                t_lo=t_lo,
                t_hi=t_hi,
                trial=res.best,
                J=res.J,
                expr=ev.x,
                end_state=EndState(x_end, v_end, w_end),
                w_in=w_in,
                converged=res.converged,
                evals=res.evals,
            )
        )
        logger.info("step %d [%g, %g]: J=%.6e lambda=%.6f omega=%.6f", i + 1, t_lo, t_hi, res.J, res.best.lam, res.best.omega)
        A, v0, w_in = x_end, v_end, w_end
        prev = res.best
    return sol


def step_index(sol: PiecewiseSolution, t) -> np.ndarray:
    """Owning step of each time; a boundary belongs to the earlier step."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    tol = 1e-12 * max(1.0, abs(sol.t_end))
    if np.any(tt < sol.t_start - tol) or np.any(tt > sol.t_end + tol):
        raise ValueError(f"t outside solution span [{sol.t_start}, {sol.t_end}]")
    uppers = np.array([s.t_hi for s in sol.steps])
    return np.minimum(np.searchsorted(uppers, tt, side="left"), len(sol.steps) - 1)


def evaluate_piecewise(sol: PiecewiseSolution, t):
    """Displacement and velocity of the piecewise solution at global time(s) ``t``."""
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    idx = step_index(sol, tt)
    x = np.empty_like(tt)
    v = np.empty_like(tt)
    for k in np.unique(idx):
        step = sol.steps[k]
        mask = idx == k
        local = np.clip(tt[mask] - step.t_lo, 0.0, step.length)
        ev = ResidualEvaluator(sol.params, step.expr)
        x[mask] = evaluate(ev.x, local)
        v[mask] = evaluate(ev.dx, local)
    if scalar:
        return float(x[0]), float(v[0])
    return x, v


@dataclass
class Comparison:
    t: np.ndarray
    x_approx: np.ndarray
    x_ref: np.ndarray
    max_abs: float
    rms: float
    rel_l2: float
    per_step: list[dict]

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.x_approx - self.x_ref)


def compare_curves(t: np.ndarray, x_approx: np.ndarray, x_ref: np.ndarray, step_of: np.ndarray, n_steps: int) -> Comparison:
    err = x_approx - x_ref
    per_step = []
    for k in range(n_steps):
        m = step_of == k
        if not np.any(m):
            per_step.append({"step": k + 1, "max_abs": 0.0, "rms": 0.0})
            continue
        per_step.append(
            {"step": k + 1, "max_abs": float(np.abs(err[m]).max()), "rms": float(np.sqrt(np.mean(err[m] ** 2)))}
        )
    ref_norm = float(np.sqrt(np.mean(x_ref**2)))
    rms = float(np.sqrt(np.mean(err**2)))
    return Comparison(
        t=t,
        x_approx=x_approx,
        x_ref=x_ref,
        max_abs=float(np.abs(err).max()),
        rms=rms,
        rel_l2=rms / ref_norm if ref_norm > 0 else math.inf,
        per_step=per_step,
    )


def compare_to_oracle(sol: PiecewiseSolution, traj: OracleTrajectory, grid_n: int = 2001) -> Comparison:
    """Uniform-grid error of the piecewise solution against a reference trajectory.

    Raises ``ValueError`` when the reference does not cover the solution span.
    """
    if traj.t0 > sol.t_start + 1e-12 or traj.t_end < sol.t_end - 1e-12:
        raise ValueError(
            f"reference span [{traj.t0}, {traj.t_end}] does not cover solution span [{sol.t_start}, {sol.t_end}]"
        )
    t = np.linspace(sol.t_start, sol.t_end, grid_n)
    x, _ = evaluate_piecewise(sol, t)
    x_ref = sample(traj, t)[:, 0]
    return compare_curves(t, x, x_ref, step_index(sol, t), len(sol.steps))

