"""Fixed-step RK4 reference solution of the damper equation.

The history integral is carried as an extra state ``w`` obeying
``w' = mu (v - w)``, which turns the integro-differential equation into the
first-order system::

    x' = v
    v' = -(2c w + x + alpha x**3 + beta sgn(v) + f0)
    w' = mu (v - w)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .system import DamperParams

BLOWUP_LIMIT = 1e12
MAX_STEPS = 100_000_000


class IntegrationError(RuntimeError):
    """Raised when the state leaves the finite range (blow-up)."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class AugmentedState(NamedTuple):
    x: float
    v: float
    w: float = 0.0


def _sign(v: float) -> float:
    return 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)


def _make_rhs(params: DamperParams, smoothing: float | None):
    two_c, alpha, beta, f0, mu = 2.0 * params.c, params.alpha, params.beta, params.f0, params.mu
    if smoothing is None:
        sg = _sign
    else:
        eps = float(smoothing)

        def sg(v):
            return math.tanh(v / eps)

    def rhs(x, v, w):
        return v, -(two_c * w + x + alpha * x * x * x + beta * sg(v) + f0), mu * (v - w)

    return rhs


def derivative(params: DamperParams, s: AugmentedState, smoothing: float | None = None) -> AugmentedState:
    """Right-hand side of the augmented system at state ``s`` (``sgn(0) = 0``)."""
    return AugmentedState(*_make_rhs(params, smoothing)(*s))


@dataclass(frozen=True)
class OracleTrajectory:
    """Samples on a grid with uniform spacing ``h`` (except possibly the last step)."""

    t: np.ndarray
    states: np.ndarray  # shape (n, 3): x, v, w
    params: DamperParams
    h: float
    smoothing: float | None = None

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def w(self) -> np.ndarray:
        return self.states[:, 2]

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> AugmentedState:
        return AugmentedState(*map(float, self.states[i]))


def integrate(
    params: DamperParams,
    init: AugmentedState,
    t0: float,
    t1: float,
    h: float,
    smoothing: float | None = None,
) -> OracleTrajectory:
    """Classical RK4 from ``t0`` to ``t1`` with step ``h``; the final step is shortened to land on ``t1``.

    ``smoothing`` replaces ``sgn(v)`` by ``tanh(v / smoothing)`` for convergence studies.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    n_full = int(math.floor((t1 - t0) / h + 1e-9))
    if n_full > MAX_STEPS:
        raise ValueError(f"{n_full} steps exceeds the limit of {MAX_STEPS}")
    times = t0 + h * np.arange(n_full + 1)
    if t1 - times[-1] > 1e-9 * h:
        times = np.append(times, t1)
    else:
        times[-1] = t1
    rhs = _make_rhs(params, smoothing)
    out = np.empty((len(times), 3))
    x, v, w = map(float, init)
    out[0] = x, v, w
    grid = times.tolist()
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        half = 0.5 * dt
        k1x, k1v, k1w = rhs(x, v, w)
        k2x, k2v, k2w = rhs(x + half * k1x, v + half * k1v, w + half * k1w)
        k3x, k3v, k3w = rhs(x + half * k2x, v + half * k2v, w + half * k2w)
        k4x, k4v, k4w = rhs(x + dt * k3x, v + dt * k3v, w + dt * k3w)
        sixth = dt / 6.0
        x += sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
        v += sixth * (k1v + 2.0 * (k2v + k3v) + k4v)
        w += sixth * (k1w + 2.0 * (k2w + k3w) + k4w)
        if not (abs(x) < BLOWUP_LIMIT and abs(v) < BLOWUP_LIMIT and abs(w) < BLOWUP_LIMIT):
            raise IntegrationError(f"state blew up at t={times[i]:.6g}: x={x}, v={v}, w={w}", float(times[i]))
        out[i] = x, v, w
    return OracleTrajectory(t=times, states=out, params=params, h=float(h), smoothing=smoothing)


def sample(traj: OracleTrajectory, t):
    """Cubic Hermite interpolation of the trajectory at ``t`` (scalar or array).

    Node derivatives are re-evaluated from the equations of motion.  Returns an
    :class:`AugmentedState` for scalar ``t`` and an ``(n, 3)`` array otherwise.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    span_tol = 1e-12 * max(1.0, abs(traj.t_end))
    if np.any(tt < traj.t0 - span_tol) or np.any(tt > traj.t_end + span_tol):
        raise ValueError(f"t outside trajectory span [{traj.t0}, {traj.t_end}]")
    tt = np.clip(tt, traj.t0, traj.t_end)
    idx = np.clip(np.searchsorted(traj.t, tt, side="right") - 1, 0, len(traj) - 2)
    t_a, t_b = traj.t[idx], traj.t[idx + 1]
    y_a, y_b = traj.states[idx], traj.states[idx + 1]
    rhs = _make_rhs(traj.params, traj.smoothing)
    d_a = np.array([rhs(*row) for row in y_a])
    d_b = np.array([rhs(*row) for row in y_b])
    dt = (t_b - t_a)[:, None]
    s = ((tt - t_a) / (t_b - t_a))[:, None]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    vals = h00 * y_a + h10 * dt * d_a + h01 * y_b + h11 * dt * d_b
    # exact nodes reproduce stored states
    on_a = s[:, 0] == 0.0
    vals[on_a] = y_a[on_a]
    on_b = s[:, 0] == 1.0
    vals[on_b] = y_b[on_b]
    if scalar:
        return AugmentedState(*map(float, vals[0]))
    return vals
