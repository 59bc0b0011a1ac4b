"""The dimensionless Bingham damper problem with exponential non-viscous damping.

Equation of motion (dimensionless time)::

    x'' + 2c * int_0^t mu exp(-mu (t - tau)) x'(tau) dtau + x + alpha x**3
        + beta sgn(x') + f0 = 0,        x(0) = A, x'(0) = v0

Nondimensionalization uses ``c = c_bar / (2 sqrt(k m))`` and
``mu = sqrt(m / k) * mu_bar``; the dimensionless time is ``t_bar * sqrt(k / m)``,
which is the reading consistent with the ``mu`` scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .etp import EtpExpression, EtpTerm, Phase, convolve_exp_kernel, differentiate, evaluate


def sgn(v):
    """Signum with ``sgn(0) == 0``, used for every friction term in the package."""
    return np.sign(v)


@dataclass(frozen=True)
class PhysicalParams:
    m: float
    c_bar: float
    mu_bar: float
    k: float
    alpha_k: float = 0.0
    beta_k: float = 0.0
    f0_k: float = 0.0
    A: float = 0.0
    v0_scaled: float = 0.0


@dataclass(frozen=True)
class DamperParams:
    c: float
    mu: float
    alpha: float = 0.0
    beta: float = 0.0
    f0: float = 0.0
    A: float = 0.0
    v0: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"damping c must be non-negative, got {self.c}")
        if not self.mu > 0:
            raise ValueError(f"relaxation rate mu must be positive, got {self.mu}")


#: Parameter set used for the benchmark runs.
BENCHMARK_PARAMS = DamperParams(c=0.1, mu=20.0, alpha=1.0, beta=0.1, f0=0.1, A=5.0, v0=0.1)


@dataclass(frozen=True)
class SeedParams:
    lam: float
    omega: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"decay rate lambda must be positive, got {self.lam}")
        if not self.omega > 0:
            raise ValueError(f"frequency omega must be positive, got {self.omega}")


@dataclass(frozen=True)
class MemoryForcing:
    """History carried into a step: adds ``w_carry * exp(-mu (t - t_origin))`` to w."""

    w_carry: float
    t_origin: float = 0.0


def nondimensionalize(p: PhysicalParams) -> DamperParams:
    if not p.m > 0 or not p.k > 0:
        raise ValueError(f"mass and stiffness must be positive, got m={p.m}, k={p.k}")
    return DamperParams(
        c=p.c_bar / (2.0 * math.sqrt(p.k * p.m)),
        mu=math.sqrt(p.m / p.k) * p.mu_bar,
        alpha=p.alpha_k / p.k,
        beta=p.beta_k / p.k,
        f0=p.f0_k / p.k,
        A=p.A,
        v0=p.v0_scaled,
    )


def dimensionalize(d: DamperParams, m: float, k: float) -> PhysicalParams:
    """Inverse of :func:`nondimensionalize` for a given mass and stiffness."""
    if not m > 0 or not k > 0:
        raise ValueError(f"mass and stiffness must be positive, got m={m}, k={k}")
    return PhysicalParams(
        m=m,
        c_bar=2.0 * d.c * math.sqrt(k * m),
        mu_bar=d.mu / math.sqrt(m / k),
        k=k,
        alpha_k=d.alpha * k,
        beta_k=d.beta * k,
        f0_k=d.f0 * k,
        A=d.A,
        v0_scaled=d.v0,
    )


def seed_solution(s: SeedParams) -> EtpExpression:
    """``z0(t) = cos(omega t) - (omega / lambda) sin(omega t)``, the kernel element of ``z'' + omega**2 z``."""
    return EtpExpression(
        (
            EtpTerm(1.0, 0, 0.0, s.omega, Phase.COS),
            EtpTerm(-s.omega / s.lam, 0, 0.0, s.omega, Phase.SIN),
        )
    )


def history_split_forcing(w_at_boundary: float, mu: float) -> EtpExpression:
    """Carried convolution state ``w(T) * exp(-mu t')`` in step-local time ``t'``."""
    if not mu > 0:
        raise ValueError(f"relaxation rate mu must be positive, got {mu}")
    return EtpExpression((EtpTerm(w_at_boundary, 0, -float(mu)),))


class ResidualEvaluator:
    """Pre-differentiated form of a candidate solution, evaluated on many times.

    Building the derivative and convolution expressions once lets the
    objective evaluate all quadrature nodes in a single vectorized pass.
    """

    def __init__(self, params: DamperParams, x: EtpExpression, memory_forcing: MemoryForcing | None = None):
        self.params = params
        self.x = x
        self.dx = differentiate(x)
        self.ddx = differentiate(self.dx)
        w = convolve_exp_kernel(self.dx, params.mu)
        if memory_forcing is not None and memory_forcing.w_carry != 0.0:
            carry = history_split_forcing(
                memory_forcing.w_carry * math.exp(params.mu * memory_forcing.t_origin), params.mu
            )
            w = w + carry
        self.w = w

    def __call__(self, t):
        p = self.params
        xv = evaluate(self.x, t)
        return (
            evaluate(self.ddx, t)
            + 2.0 * p.c * evaluate(self.w, t)
            + xv
            + p.alpha * xv**3
            + p.beta * sgn(evaluate(self.dx, t))
            + p.f0
        )


def residual(params: DamperParams, x: EtpExpression, t, memory_forcing: MemoryForcing | None = None):
    """Residual of the equation of motion for the candidate ``x`` at local time(s) ``t``.

    The cubic and friction terms are applied to evaluated values; the
    history integral is the exact closed-form convolution of ``x'``.
    """
    return ResidualEvaluator(params, x, memory_forcing)(t)
