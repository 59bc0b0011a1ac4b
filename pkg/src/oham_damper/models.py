"""Pointwise constitutive and force models for magnetorheological dampers.

All evaluators accept scalars or numpy arrays and use ``sgn(0) = 0``.
Regime switching in the Bingham body model is supplied by the caller.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .etp import EtpExpression, convolve_exp_kernel, evaluate
from .system import sgn


@dataclass(frozen=True)
class BinghamShearParams:
    tau_y: float
    eta: float

    def __post_init__(self):
        if self.tau_y < 0 or self.eta < 0:
            raise ValueError("tau_y and eta must be non-negative")


@dataclass(frozen=True)
class BinghamForceParams:
    f_c: float
    c_0: float
    f_0: float = 0.0

    def __post_init__(self):
        if self.f_c < 0 or self.c_0 < 0:
            raise ValueError("f_c and c_0 must be non-negative")


@dataclass(frozen=True)
class HerschelBulkleyParams:
    k_consistency: float
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"flow index m must be positive, got {self.m}")
        if self.k_consistency < 0:
            raise ValueError("consistency must be non-negative")


@dataclass(frozen=True)
class FieldSaturationParams:
    Y0: float
    Yinf: float
    alpha_ys: float

    def __post_init__(self):
        if not self.alpha_ys > 0:
            raise ValueError(f"saturation moment index must be positive, got {self.alpha_ys}")


@dataclass(frozen=True)
class BinghamBodyParams:
    f_c: float
    c_0: float
    f_0: float = 0.0
    k_spring: float = 0.0

    def __post_init__(self):
        if self.f_c < 0 or self.c_0 < 0 or self.k_spring < 0:
            raise ValueError("f_c, c_0 and k_spring must be non-negative")


@dataclass(frozen=True)
class LiModelParams:
    f_c: float
    c_0: float
    m_fluid: float = 0.0

    def __post_init__(self):
        if self.f_c < 0 or self.c_0 < 0 or self.m_fluid < 0:
            raise ValueError("f_c, c_0 and m_fluid must be non-negative")


class Regime(str, enum.Enum):
    FLOW = "flow"
    STICK = "stick"


def bingham_shear_stress(params: BinghamShearParams, gamma_dot):
    """``tau_y sgn(gamma_dot) + eta gamma_dot``."""
    return params.tau_y * sgn(gamma_dot) + params.eta * gamma_dot


def bingham_force(params: BinghamForceParams, v):
    """Coulomb friction in parallel with a viscous damper, plus accumulator offset."""
    return params.f_c * sgn(v) + params.c_0 * v + params.f_0


def herschel_bulkley_stress(params: HerschelBulkleyParams, tau_y: float, gamma_dot):
    """``[tau_y sgn(g) + k |g|^(1/m)] sgn(g)``.

    The power acts on the magnitude of the shear rate and the sign is carried
    by the post-yield branch, so ``m = 1`` recovers the Bingham stress exactly.
    """
    s = sgn(gamma_dot)
    mag = np.abs(gamma_dot)
    if params.m == 1:
        flow = params.k_consistency * mag
    else:
        flow = params.k_consistency * mag ** (1.0 / params.m)
    return tau_y * s + flow * s


def field_saturation(params: FieldSaturationParams, B):
    """Field dependence of a rheological parameter, saturating from ``Y0`` toward ``Yinf``."""
    B_arr = np.asarray(B, dtype=float)
    if np.any(B_arr < 0):
        raise ValueError("magnetic flux density must be non-negative")
    e = np.exp(-B_arr * params.alpha_ys)
    out = params.Yinf + (params.Y0 - params.Yinf) * (2.0 * e - e * e)
    return float(out) if np.ndim(B) == 0 else out


def bingham_body_force(params: BinghamBodyParams, regime: Regime | str, v1, x1, x2):
    regime = Regime(regime)
    if regime is Regime.FLOW:
        return params.f_c * sgn(v1) + params.c_0 * v1 + params.f_0
    return params.k_spring * (np.asarray(x2) - np.asarray(x1)) + params.f_0


def li_force(params: LiModelParams, v, a):
    """Visco-plastic force with the inertia of the displaced fluid."""
    return params.f_c * sgn(v) + params.c_0 * v + params.m_fluid * a


def bingmax_force(c: float, mu: float, f_c: float, velocity_history: EtpExpression, t):
    """Maxwell element (exponential relaxation kernel) in parallel with Coulomb friction.

    ``velocity_history`` is the velocity on ``[0, t]``; the history integral
    is the closed-form kernel convolution.
    """
    w = convolve_exp_kernel(velocity_history, mu)
    return c * evaluate(w, t) + f_c * sgn(evaluate(velocity_history, t))

