import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from support import PRINTED_STEP1, etp_expressions, random_expression
from oham_damper.etp import EtpExpression, EtpTerm, Phase, convolve_exp_kernel, differentiate, evaluate, shift
from oham_damper.oham import build_trial
from oham_damper.system import (
    BENCHMARK_PARAMS,
    DamperParams,
    MemoryForcing,
    PhysicalParams,
    SeedParams,
    dimensionalize,
    history_split_forcing,
    nondimensionalize,
    residual,
    seed_solution,
    sgn,
)

HARMONIC = DamperParams(c=0.0, mu=20.0)
COS_T = EtpExpression([EtpTerm(1.0, 0, 0.0, 1.0, Phase.COS)])


def test_sign_convention():
    assert sgn(0.0) == 0.0
    np.testing.assert_array_equal(sgn(np.array([-2.0, 0.0, 3.0])), [-1.0, 0.0, 1.0])


def test_damper_params_validation():
    with pytest.raises(ValueError):
        DamperParams(c=-0.1, mu=1.0)
    with pytest.raises(ValueError):
        DamperParams(c=0.1, mu=0.0)


# ---- nondimensionalization


def test_unit_mass_and_stiffness():
    d = nondimensionalize(PhysicalParams(m=1.0, c_bar=0.2, mu_bar=20.0, k=1.0))
    assert d.c == pytest.approx(0.1, rel=1e-15)
    assert d.mu == 20.0


def test_zero_damping_maps_to_zero():
    assert nondimensionalize(PhysicalParams(m=2.0, c_bar=0.0, mu_bar=3.0, k=5.0)).c == 0.0


def test_relaxation_rate_scales_with_time_unit():
    assert nondimensionalize(PhysicalParams(m=4.0, c_bar=0.0, mu_bar=10.0, k=1.0)).mu == pytest.approx(20.0)


@pytest.mark.parametrize("m,k", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
def test_rejects_nonpositive_mass_or_stiffness(m, k):
    with pytest.raises(ValueError):
        nondimensionalize(PhysicalParams(m=m, c_bar=0.1, mu_bar=1.0, k=k))


def test_round_trip_random_draws(rng):
    for _ in range(100):
        p = PhysicalParams(
            m=rng.uniform(0.1, 10),
            c_bar=rng.uniform(0, 5),
            mu_bar=rng.uniform(0.1, 50),
            k=rng.uniform(0.1, 100),
            alpha_k=rng.uniform(-10, 10),
            beta_k=rng.uniform(0, 10),
            f0_k=rng.uniform(-5, 5),
            A=rng.uniform(-5, 5),
            v0_scaled=rng.uniform(-2, 2),
        )
        back = dimensionalize(nondimensionalize(p), p.m, p.k)
        for name in p.__dataclass_fields__:
            assert getattr(back, name) == pytest.approx(getattr(p, name), rel=1e-12, abs=1e-300)


# ---- seed solution


def test_seed_initial_values():
    s = SeedParams(lam=0.4221369200, omega=1.17)
    z = seed_solution(s)
    assert evaluate(z, 0.0) == 1.0
    assert evaluate(differentiate(z), 0.0) == pytest.approx(-(1.17**2) / 0.4221369200, rel=1e-15)


def test_seed_in_kernel_of_linear_operator(rng):
    s = SeedParams(lam=0.7, omega=1.9)
    z = seed_solution(s)
    t = rng.uniform(0, 10, 100)
    Lz = evaluate(differentiate(differentiate(z)), t) + s.omega**2 * evaluate(z, t)
    assert np.abs(Lz).max() <= 1e-12 * (1 + s.omega**2 * s.omega / s.lam)


@pytest.mark.parametrize("lam,omega", [(0.0, 1.0), (1.0, 0.0), (-0.1, 1.0)])
def test_seed_rejects_degenerate(lam, omega):
    with pytest.raises(ValueError):
        SeedParams(lam, omega)


# ---- residual


def test_harmonic_residual_vanishes():
    t = np.linspace(0, 10, 101)
    assert np.abs(residual(HARMONIC, COS_T, t)).max() <= 1e-12


def test_offset_survives_exactly():
    p = DamperParams(c=0.0, mu=20.0, f0=0.1)
    t = np.linspace(0, 10, 101)
    np.testing.assert_allclose(residual(p, COS_T, t), 0.1, rtol=0, atol=1e-13)


def _quadrature_residual(params, x, t):
    dx = differentiate(x)
    w, _ = quad(lambda s: params.mu * math.exp(-params.mu * (t - s)) * evaluate(dx, s), 0, t, epsabs=0, epsrel=1e-12, limit=400)
    xv = evaluate(x, t)
    return (
        evaluate(differentiate(dx), t)
        + 2 * params.c * w
        + xv
        + params.alpha * xv**3
        + params.beta * np.sign(evaluate(dx, t))
        + params.f0
    )


def test_printed_trial_residual_vs_quadrature():
    x = build_trial(PRINTED_STEP1)
    t = np.linspace(0.05, 3.5, 20)
    R = residual(BENCHMARK_PARAMS, x, t)
    assert np.all(np.isfinite(R))
    ref = np.array([_quadrature_residual(BENCHMARK_PARAMS, x, s) for s in t])
    np.testing.assert_allclose(R, ref, rtol=1e-9, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(etp_expressions(max_size=5), st.floats(-2, 2), st.floats(0, 5))
def test_residual_affine_in_offset(x, a, t):
    base = DamperParams(c=0.1, mu=20.0, alpha=1.0, beta=0.1)
    shifted = DamperParams(c=0.1, mu=20.0, alpha=1.0, beta=0.1, f0=a)
    r0, r1 = residual(base, x, t), residual(shifted, x, t)
    assert r1 - r0 == pytest.approx(a, abs=1e-9 * (1 + abs(r0)))


def test_smooth_residual_has_no_jumps_without_friction(rng):
    p = DamperParams(c=0.1, mu=20.0, alpha=1.0)
    x = build_trial(PRINTED_STEP1)
    coarse = np.abs(np.diff(residual(p, x, np.linspace(0, 3.5, 20001)))).max()
    fine = np.abs(np.diff(residual(p, x, np.linspace(0, 3.5, 80001)))).max()
    # increments of a smooth function shrink with the grid spacing
    assert fine < 0.3 * coarse
    assert fine < 2 * p.beta + 0.02


def test_friction_jumps_only_at_velocity_sign_changes():
    x = build_trial(PRINTED_STEP1)
    t = np.linspace(0, 3.5, 80001)
    R = residual(BENCHMARK_PARAMS, x, t)
    v = evaluate(differentiate(x), t)
    big = np.flatnonzero(np.abs(np.diff(R)) > BENCHMARK_PARAMS.beta)
    assert big.size > 0
    assert np.all(np.sign(v[big]) != np.sign(v[big + 1]))


# ---- history split


def test_history_split_forcing_cases():
    assert len(history_split_forcing(0.0, 20.0)) == 0
    assert evaluate(history_split_forcing(1.0, 20.0), 0.0) == 1.0
    with pytest.raises(ValueError):
        history_split_forcing(1.0, 0.0)


def test_history_split_identity(rng):
    mu, T = 20.0, 1.3
    for _ in range(20):
        v = random_expression(rng, 6)
        w_full = convolve_exp_kernel(v, mu)
        w_T = evaluate(w_full, T)
        local = convolve_exp_kernel(shift(v, T), mu) + history_split_forcing(w_T, mu)
        s = np.linspace(0, T, 41)
        np.testing.assert_allclose(evaluate(local, s), evaluate(w_full, T + s), rtol=1e-10, atol=1e-10)


def test_memory_forcing_origin_offsets_carry():
    x = build_trial(PRINTED_STEP1)
    a = residual(BENCHMARK_PARAMS, x, 0.7, MemoryForcing(2.0, t_origin=0.5))
    b = residual(BENCHMARK_PARAMS, x, 0.2, MemoryForcing(2.0)) - 2 * BENCHMARK_PARAMS.c * 2.0 * math.exp(-20 * 0.2)
    c = residual(BENCHMARK_PARAMS, x, 0.7) + 2 * BENCHMARK_PARAMS.c * 2.0 * math.exp(-20 * 0.2)
    assert a == pytest.approx(c, rel=1e-12)
    assert b == pytest.approx(residual(BENCHMARK_PARAMS, x, 0.2), rel=1e-12)
