"""Exponential-trigonometric-polynomial (ETP) expressions.

An ETP expression is a finite sum of terms ``c * t**k * exp(a*t) * cos(b*t)``
or ``c * t**k * exp(a*t) * sin(b*t)``.  The class is closed under
differentiation and under convolution with the relaxation kernel
``mu * exp(-mu*(t - tau))``, which is all the damper residual needs.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

DEGENERATE_TOL = 1e-12
NEAR_DEGENERATE_TOL = 1e-8


class Phase(enum.IntEnum):
    COS = 0
    SIN = 1


@dataclass(frozen=True)
class EtpTerm:
    coeff: float
    power: int = 0
    rate: float = 0.0
    freq: float = 0.0
    phase: Phase = Phase.COS

    def __post_init__(self):
        if self.power < 0:
            raise ValueError(f"power must be non-negative, got {self.power}")
        if type(self.phase) is not Phase:
            object.__setattr__(self, "phase", Phase(self.phase))

    @property
    def key(self) -> tuple:
        return (self.power, self.rate, self.freq, self.phase)

    def __call__(self, t):
        trig = np.cos if self.phase is Phase.COS else np.sin
        return self.coeff * t**self.power * np.exp(self.rate * t) * trig(self.freq * t)


def _normalized_key(term: EtpTerm) -> tuple[tuple, float] | None:
    coeff, freq, phase = term.coeff, term.freq, term.phase
    if freq < 0.0:
        # cos is even, sin is odd
        freq = -freq
        if phase is Phase.SIN:
            coeff = -coeff
    if (freq == 0.0 and phase is Phase.SIN) or coeff == 0.0:
        return None
    return (term.power, float(term.rate), float(freq), phase), float(coeff)


def canonicalize(terms: Iterable[EtpTerm]) -> tuple[EtpTerm, ...]:
    """Merge terms sharing ``(power, rate, freq, phase)`` and drop zeros.

    Merging uses exact key equality; first-appearance order is kept.
    """
    merged: dict[tuple, float] = {}
    for term in terms:
        item = _normalized_key(term)
        if item is None:
            continue
        key, coeff = item
        merged[key] = merged.get(key, 0.0) + coeff
    return tuple(
        EtpTerm(coeff, power, rate, freq, phase)
        for (power, rate, freq, phase), coeff in merged.items()
        if coeff != 0.0
    )


@dataclass(frozen=True)
class EtpExpression:
    """Immutable, canonical sum of :class:`EtpTerm` objects."""

    terms: tuple[EtpTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", canonicalize(self.terms))

    @classmethod
    def constant(cls, value: float) -> "EtpExpression":
        return cls((EtpTerm(value),))

    @classmethod
    def zero(cls) -> "EtpExpression":
        return cls(())

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "EtpExpression") -> "EtpExpression":
        if not isinstance(other, EtpExpression):
            return NotImplemented
        return EtpExpression(self.terms + other.terms)

    def __neg__(self) -> "EtpExpression":
        return self.scale(-1.0)

    def __sub__(self, other: "EtpExpression") -> "EtpExpression":
        if not isinstance(other, EtpExpression):
            return NotImplemented
        return self + (-other)

    def scale(self, factor: float) -> "EtpExpression":
        return EtpExpression(
            tuple(EtpTerm(tm.coeff * factor, tm.power, tm.rate, tm.freq, tm.phase) for tm in self.terms)
        )

    def __mul__(self, factor):
        if isinstance(factor, EtpExpression):
            return NotImplemented
        return self.scale(float(factor))

    __rmul__ = __mul__

    @cached_property
    def _arrays(self):
        # transcendental factors are computed once per distinct (rate, freq) pair
        pairs: dict[tuple[float, float], int] = {}
        n = len(self.terms)
        coeff = np.empty(n)
        power = np.empty(n, dtype=int)
        pair_idx = np.empty(n, dtype=int)
        is_sin = np.zeros(n, dtype=bool)
        for i, tm in enumerate(self.terms):
            coeff[i], power[i] = tm.coeff, tm.power
            pair_idx[i] = pairs.setdefault((tm.rate, tm.freq), len(pairs))
            is_sin[i] = tm.phase is Phase.SIN
        rates = np.array([r for r, _ in pairs])
        freqs = np.array([f for _, f in pairs])
        return coeff, power, pair_idx, is_sin, rates, freqs

    def __call__(self, t):
        return evaluate(self, t)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for tm in self.terms:
            factors = [f"{tm.coeff:.10g}"]
            if tm.power:
                factors.append("t" if tm.power == 1 else f"t^{tm.power}")
            if tm.rate:
                factors.append(f"exp({tm.rate:.10g} t)")
            if tm.freq:
                factors.append(f"{'cos' if tm.phase is Phase.COS else 'sin'}({tm.freq:.10g} t)")
            parts.append("*".join(factors))
        return " + ".join(parts)


def evaluate(expr: EtpExpression, t):
    """Evaluate ``expr`` at scalar or array ``t``.

    Returns a float for scalar input and an ndarray shaped like ``t`` otherwise.
    """
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    if not expr.terms:
        return 0.0 if scalar else np.zeros_like(tt)
    coeff, power, pair_idx, is_sin, rates, freqs = expr._arrays
    ts = tt.reshape(-1, 1)
    growth = np.exp(ts * rates)[:, pair_idx]
    phase = ts * freqs
    trig = np.where(is_sin, np.sin(phase)[:, pair_idx], np.cos(phase)[:, pair_idx])
    powers = (ts ** np.arange(power.max() + 1))[:, power]
    vals = (powers * growth * trig) @ coeff
    if scalar:
        return float(vals[0])
    return vals.reshape(tt.shape)


def differentiate(expr: EtpExpression) -> EtpExpression:
    """Exact time derivative (product rule over ``t**k``, exponential and trig factors)."""
    out = []
    for tm in expr.terms:
        c, k, a, b = tm.coeff, tm.power, tm.rate, tm.freq
        if k:
            out.append(EtpTerm(c * k, k - 1, a, b, tm.phase))
        if a:
            out.append(EtpTerm(c * a, k, a, b, tm.phase))
        if b:
            if tm.phase is Phase.COS:
                out.append(EtpTerm(-c * b, k, a, b, Phase.SIN))
            else:
                out.append(EtpTerm(c * b, k, a, b, Phase.COS))
    return EtpExpression(tuple(out))


def _split_complex(value: complex, k: int, rate: float, freq: float, take_imag: bool) -> list[EtpTerm]:
    # Re or Im of value * t**k * exp((rate + i freq) t) as cos/sin terms
    re, im = value.real, value.imag
    if take_imag:
        return [EtpTerm(im, k, rate, freq, Phase.COS), EtpTerm(re, k, rate, freq, Phase.SIN)]
    return [EtpTerm(re, k, rate, freq, Phase.COS), EtpTerm(-im, k, rate, freq, Phase.SIN)]


def convolve_exp_kernel(expr: EtpExpression, mu: float) -> EtpExpression:
    """Closed form of ``w(t) = int_0^t mu exp(-mu (t - tau)) f(tau) dtau`` for ``f = expr``.

    Each term is integrated through the complex primitive of
    ``tau**k exp(s tau)`` with ``s = rate + mu + i freq``.  When ``s`` vanishes
    the primitive is the polynomial ``tau**(k+1) / (k+1)``.
    """
    mu = float(mu)
    if not mu > 0.0 or not math.isfinite(mu):
        raise ValueError(f"relaxation rate mu must be positive and finite, got {mu}")
    out: list[EtpTerm] = []
    for tm in expr.terms:
        c, k, a, b = tm.coeff, tm.power, tm.rate, tm.freq
        take_imag = tm.phase is Phase.SIN
        if abs(a + mu) < DEGENERATE_TOL and b < DEGENERATE_TOL:
            out.append(EtpTerm(mu * c / (k + 1), k + 1, -mu, 0.0, Phase.COS))
            continue
        s = complex(a + mu, b)
        if abs(s) < NEAR_DEGENERATE_TOL:
            warnings.warn(
                f"near-degenerate kernel convolution (|rate + mu + i freq| = {abs(s):.3g}); "
                "closed form is ill-conditioned",
                RuntimeWarning,
                stacklevel=2,
            )
        # primitive: exp(s tau) * sum_j (-1)^j k!/(k-j)! tau^(k-j) / s^(j+1)
        falling = 1.0
        for j in range(k + 1):
            if j:
                falling *= k - j + 1
            w = mu * c * (-1) ** j * falling / s ** (j + 1)
            out.extend(_split_complex(w, k - j, a, b, take_imag))
        # lower limit: exp(-mu t) * (-mu c) * (-1)^k k! / s^(k+1)
        w0 = -mu * c * (-1) ** k * math.factorial(k) / s ** (k + 1)
        out.append(EtpTerm(w0.imag if take_imag else w0.real, 0, -mu, 0.0, Phase.COS))
    return EtpExpression(tuple(out))


def shift(expr: EtpExpression, dt: float) -> EtpExpression:
    """Expression for ``s -> expr(s + dt)``, expanded back into the ETP class."""
    out = []
    for tm in expr.terms:
        c, k, a, b = tm.coeff, tm.power, tm.rate, tm.freq
        scale = c * math.exp(a * dt)
        cb, sb = math.cos(b * dt), math.sin(b * dt)
        # cos(b(s+dt)) = cos(bs)cb - sin(bs)sb ; sin(b(s+dt)) = sin(bs)cb + cos(bs)sb
        if tm.phase is Phase.COS:
            trig = ((cb, Phase.COS), (-sb, Phase.SIN))
        else:
            trig = ((cb, Phase.SIN), (sb, Phase.COS))
        for j in range(k + 1):
            binom = math.comb(k, j) * dt ** (k - j)
            for factor, phase in trig:
                out.append(EtpTerm(scale * binom * factor, j, a, b, phase))
    return EtpExpression(tuple(out))
