"""scikit-learn style wrappers around the OHAM solver and the RK4 reference.

Both estimators are configured entirely through constructor arguments, so
``get_params`` / ``set_params`` / ``clone`` work as usual.  ``fit`` ignores
its data arguments (the problem is defined by the parameters) and
``predict`` maps times to displacements, which lets ``score(t, x_ref)``
report the R^2 of one solution against another.

>>> ref = RK4Reference(t_end=1.0, h=1e-3).fit()
>>> ref.predict([0.0]).round(6)
array([5.])
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .multistep import BENCHMARK_BOUNDARIES, PiecewiseSolution, StepPlan, evaluate_piecewise, solve_multistep
from .oham import OptimizerConfig
from .reference import AugmentedState, integrate, sample
from .system import DamperParams


def check_times(X) -> np.ndarray:
    """Validate evaluation times: a 1-d array or a single-column 2-d array of finite floats."""
    arr = check_array(X, ensure_2d=False, dtype=np.float64, input_name="X")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of times, got shape {arr.shape}")
        arr = arr[:, 0]
    return arr


class _DamperMixin:
    def _damper_params(self) -> DamperParams:
        return DamperParams(
            c=self.c, mu=self.mu, alpha=self.alpha, beta=self.beta, f0=self.f0, A=self.A, v0=self.v0
        )


class OHAMDamperSolver(_DamperMixin, RegressorMixin, BaseEstimator):
    """Piecewise first-order OHAM approximation of the damper response."""

    def __init__(
        self,
        c=0.1,
        mu=20.0,
        alpha=1.0,
        beta=0.1,
        f0=0.1,
        A=5.0,
        v0=0.1,
        boundaries=BENCHMARK_BOUNDARIES,
        memory_carry=True,
        method="nelder-mead",
        max_evals=20000,
        restarts=5,
        tolerance=1e-10,
        seed=0,
        nodes_per_unit=200.0,
    ):
        self.c = c
        self.mu = mu
        self.alpha = alpha
        self.beta = beta
        self.f0 = f0
        self.A = A
        self.v0 = v0
        self.boundaries = boundaries
        self.memory_carry = memory_carry
        self.method = method
        self.max_evals = max_evals
        self.restarts = restarts
        self.tolerance = tolerance
        self.seed = seed
        self.nodes_per_unit = nodes_per_unit

    def _plan(self) -> StepPlan:
        cfg = OptimizerConfig(
            method=self.method,
            max_evals=self.max_evals,
            restarts=self.restarts,
            tolerance=self.tolerance,
            seed=self.seed,
        )
        return StepPlan(
            boundaries=tuple(self.boundaries),
            optimizer=cfg,
            memory_carry=self.memory_carry,
            nodes_per_unit=self.nodes_per_unit,
        )

    def fit(self, X=None, y=None):
        self.solution_: PiecewiseSolution = solve_multistep(self._damper_params(), self._plan())
        self.steps_ = self.solution_.steps
        self.objective_values_ = np.array([s.J for s in self.steps_])
        self.converged_ = self.solution_.converged
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "solution_")
        return evaluate_piecewise(self.solution_, check_times(X))[0]

    def transform(self, X) -> np.ndarray:
        """Columns ``(x, v)`` at the given times."""
        check_is_fitted(self, "solution_")
        x, v = evaluate_piecewise(self.solution_, check_times(X))
        return np.column_stack([x, v])


class RK4Reference(_DamperMixin, RegressorMixin, BaseEstimator):
    """Fixed-step RK4 trajectory of the augmented system, interpolated on demand."""

    def __init__(
        self, c=0.1, mu=20.0, alpha=1.0, beta=0.1, f0=0.1, A=5.0, v0=0.1, t_end=10.0, h=1e-4, smoothing=None
    ):
        self.c = c
        self.mu = mu
        self.alpha = alpha
        self.beta = beta
        self.f0 = f0
        self.A = A
        self.v0 = v0
        self.t_end = t_end
        self.h = h
        self.smoothing = smoothing

    def fit(self, X=None, y=None):
        self.trajectory_ = integrate(
            self._damper_params(), AugmentedState(self.A, self.v0, 0.0), 0.0, self.t_end, self.h, self.smoothing
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "trajectory_")
        return sample(self.trajectory_, check_times(X))[:, 0]

    def transform(self, X) -> np.ndarray:
        """Columns ``(x, v, w)`` at the given times."""
        check_is_fitted(self, "trajectory_")
        return sample(self.trajectory_, check_times(X))
