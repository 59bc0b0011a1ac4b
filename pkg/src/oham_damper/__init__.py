"""Optimal homotopy asymptotic solution of a Bingham-type MR damper oscillator
with exponential (non-viscous) damping, plus an RK4 reference integrator."""

from .etp import EtpExpression, EtpTerm, Phase, convolve_exp_kernel, differentiate, evaluate, shift
from .multistep import (
    BENCHMARK_BOUNDARIES,
    PiecewiseSolution,
    StepPlan,
    compare_to_oracle,
    evaluate_piecewise,
    solve_multistep,
)
from .oham import ObjectiveSpec, OptimizerConfig, TrialSolution, build_trial, objective, optimize
from .reference import AugmentedState, IntegrationError, integrate, sample
from .system import BENCHMARK_PARAMS, DamperParams, residual

__version__ = "0.1.0"

__all__ = [
    "AugmentedState",
    "DamperParams",
    "EtpExpression",
    "EtpTerm",
    "IntegrationError",
    "ObjectiveSpec",
    "OptimizerConfig",
    "BENCHMARK_BOUNDARIES",
    "BENCHMARK_PARAMS",
    "Phase",
    "PiecewiseSolution",
    "StepPlan",
    "TrialSolution",
    "build_trial",
    "compare_to_oracle",
    "convolve_exp_kernel",
    "differentiate",
    "evaluate",
    "evaluate_piecewise",
    "integrate",
    "objective",
    "optimize",
    "residual",
    "sample",
    "shift",
    "solve_multistep",
]
