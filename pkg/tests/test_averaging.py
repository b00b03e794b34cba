import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscavg import make_ex1, make_ex2
from oscavg.averaging import (
    PhaseLaw,
    SystemSpec,
    apply_homological,
    check_nonresonance,
    compute_normal_form,
    residual_along_trajectory,
    solve_homological,
    transform_forward,
    transform_inverse,
)
from oscavg.errors import NonzeroMean, OutOfDomain, ResonanceDetected
from oscavg.series import FTSeries, RadialSeries
from oscavg.simulate import IntegratorConfig, integrate_cartesian, fit_decay_exponent

from conftest import random_ft, random_spec

SQRT2 = float(np.sqrt(2.0))


def _spec_with_modes(s0, k2_values, omega0=1.0):
    modes = {(0, 0): [1.0]}
    for k2 in k2_values:
        if k2 > 0:
            modes[(0, k2)] = [0.5]
    f = FTSeries.from_modes(modes)
    return SystemSpec(
        omega=RadialSeries.constant(omega0), q=1, p=1, f_terms={1: f}, g_terms={}, phase=PhaseLaw((s0, 0.0), 1), r0=1.0
    )


# non-resonance ------------------------------------------------------------------


def test_nonresonance_margin_sqrt2():
    spec = _spec_with_modes(SQRT2, [1])
    assert spec.mode_set == {-1, 0, 1}
    out = check_nonresonance(spec, 32)
    brute = min(abs(k1 + k2 * SQRT2) for k1 in range(-32, 33) for k2 in (-1, 0, 1) if (k1, k2) != (0, 0))
    assert out["margin"] == pytest.approx(brute, abs=1e-15)
    assert out["margin"] == pytest.approx(SQRT2 - 1, abs=1e-15)
    assert out["r_star"] <= spec.r0


def test_resonance_detected():
    spec = _spec_with_modes(1.0, [1])
    with pytest.raises(ResonanceDetected) as exc:
        check_nonresonance(spec)
    assert exc.value.mode in {(1, -1), (-1, 1)}


def test_pendulum_is_nonresonant():
    spec = make_ex2()
    out = check_nonresonance(spec)
    assert out["margin"] > 0.1
    # w(r) drops as r grows, so a finite r_star below r0 may appear but never above
    assert 0 < out["r_star"] <= spec.r0


# homological equation -----------------------------------------------------------


def test_homological_examples():
    w = RadialSeries.constant(1.0)
    v = solve_homological(FTSeries.trig("cos", 1, 0), w, SQRT2)
    assert v.allclose(FTSeries.trig("sin", 1, 0), atol=1e-15)
    v = solve_homological(FTSeries.trig("sin", 0, 1), w, SQRT2)
    assert v.allclose(FTSeries.trig("cos", 0, 1, -1 / SQRT2), atol=1e-15)


def test_homological_rejects_mean():
    with pytest.raises(NonzeroMean):
        solve_homological(FTSeries.lift(1.0), RadialSeries.constant(1.0), SQRT2)


def test_homological_rejects_resonance():
    with pytest.raises(ResonanceDetected):
        solve_homological(FTSeries.trig("cos", 1, -1), RadialSeries.constant(1.0), 1.0)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_homological_residual_random(seed):
    rng = np.random.default_rng(seed)
    F = random_ft(rng, zero_mean=True)
    omega = RadialSeries.from_coeffs([1.0, 0.0, -1 / 16, 0.0, 0.01])
    v = solve_homological(F, omega, SQRT2)
    assert v.average().is_zero(1e-14)
    resid = (apply_homological(v, omega, SQRT2) - F).max_abs()
    assert resid < 1e-10 * max(1.0, F.max_abs())


# normal form -------------------------------------------------------------------


@pytest.mark.parametrize("beta0,gamma0", [(-2.0, 1.0), (-1.5, 0.7), (0.5, 2.0)])
def test_ex1_case1(beta0, gamma0):
    avg = compute_normal_form(make_ex1(h=2, p=3, beta0=beta0, gamma0=gamma0))
    assert avg.Lambda[1].is_zero(1e-12)
    assert avg.Lambda[2].allclose(RadialSeries.from_coeffs([0.0, beta0 / 2]), atol=1e-9)
    assert avg.Lambda[3][0] == pytest.approx(gamma0 / 2, abs=1e-9)


def test_ex1_case2():
    beta0, gamma0 = -1.5, 1.0
    avg = compute_normal_form(make_ex1(h=2, p=2, beta0=beta0, gamma0=gamma0))
    assert avg.Lambda[1].is_zero(1e-12)
    assert avg.Lambda[2].allclose(RadialSeries.from_coeffs([gamma0 / 2, beta0 / 2]), atol=1e-9)


def test_ex1_case4():
    beta0, gamma0 = -1.0, 1.0
    avg = compute_normal_form(make_ex1(h=3, p=3, beta0=beta0, gamma0=gamma0))
    assert avg.Lambda[1].is_zero(1e-12)
    assert avg.Lambda[2].is_zero(1e-12)
    assert avg.Lambda[3].allclose(RadialSeries.from_coeffs([gamma0 / 2, beta0 / 2]), atol=1e-9)


def test_normal_form_order_bounds():
    spec = make_ex1()
    with pytest.raises(ValueError):
        compute_normal_form(spec, N=2)
    with pytest.raises(ValueError):
        compute_normal_form(spec, N=6)
    assert compute_normal_form(spec).N == 5


@pytest.mark.parametrize("q", [1, 2, 3])
def test_normal_form_invariants(rng, q):
    spec = random_spec(rng, q=q, p=3)
    avg = compute_normal_form(spec)
    s0 = spec.phase.s0
    for k in range(1, avg.N + 1):
        vk, Fk = avg.v[k], avg.F[k]
        assert vk.average().is_zero(1e-12)
        resid = (apply_homological(vk, spec.omega, s0) - Fk).max_abs()
        assert resid < 1e-10 * max(1.0, Fk.max_abs())
        if k < spec.p:
            assert abs(avg.Lambda[k][0]) < 1e-11
    assert avg.Lambda[spec.p][0] == pytest.approx(spec.mu_p, abs=1e-12)


def _transport(spec, i, vj):
    out = FTSeries.zero()
    fi, gi, sig = spec.f_terms.get(i), spec.g_terms.get(i), spec.phase.sigma(i)
    if fi is not None:
        out = out + fi * vj.diff("r")
    if gi is not None:
        out = out + (gi * vj.diff("phi")).div_r()
    return out + vj.diff("S") * sig


@pytest.mark.parametrize("q", [1, 2, 3])
def test_explicit_R2_R3(rng, q):
    """The engine's generic assembly matches the closed forms for the second and third orders."""
    spec = random_spec(rng, q=q, p=3)
    avg = compute_normal_form(spec, N=3)
    L, v = avg.Lambda, avg.v
    dL = {k: FTSeries.lift(L[k].deriv()) for k in L}
    d2L1 = FTSeries.lift(L[1].deriv(2))

    def v_at(k):
        return v.get(k, FTSeries.zero())

    R2 = v[1] * dL[1] - v_at(2 - q) * (1 - 2 / q) - _transport(spec, 1, v[1])
    R3 = (
        v[1] * dL[2]
        + v[2] * dL[1]
        + v[1] * v[1] * d2L1 * 0.5
        - v_at(3 - q) * (1 - 3 / q)
        - _transport(spec, 1, v[2])
        - _transport(spec, 2, v[1])
    )
    assert avg.R[1].is_zero(0.0)
    for hand, eng in ((R2, avg.R[2]), (R3, avg.R[3])):
        R = min(hand.trunc_order, eng.trunc_order)
        diff = (hand.truncate(R) - eng.truncate(R)).max_abs()
        assert diff < 1e-10 * max(1.0, eng.max_abs())


def _quadrature_mean(term, n=256):
    phi = np.arange(n) * 2 * np.pi / n
    P, S = np.meshgrid(phi, phi, indexing="ij")
    return float(np.mean(term.eval(np.zeros_like(P), P, S)))


@pytest.mark.parametrize("make", [lambda: make_ex1(), lambda: make_ex1(h=2, p=2, beta0=-1.5), lambda: make_ex2()])
def test_lambda_p_quadrature_oracle(make):
    spec = make()
    avg = compute_normal_form(spec)
    assert avg.Lambda[spec.p][0] == pytest.approx(_quadrature_mean(spec.f(spec.p)), abs=1e-8)


def test_lambda_p_quadrature_oracle_random(rng):
    spec = random_spec(rng, q=2, p=2)
    avg = compute_normal_form(spec)
    assert avg.Lambda[2][0] == pytest.approx(_quadrature_mean(spec.f(2)), abs=1e-8)


# near-identity transformation ---------------------------------------------------


def test_transform_round_trip(rng):
    spec = random_spec(rng, q=2, p=3)
    avg = compute_normal_form(spec)
    for _ in range(200):
        rho = rng.uniform(-0.9, 0.9) * avg.r_star
        phi = rng.uniform(0, 2 * np.pi)
        t = avg.t_star * 10 ** rng.uniform(0, 4)
        r = transform_inverse(avg, rho, phi, t)
        assert transform_forward(avg, r, phi, t, check=False) == pytest.approx(rho, abs=1e-10)


def test_identity_transform():
    spec = make_ex1(alpha0=0, alpha1=0, beta0=0, beta1=0, gamma0=1.0, gamma1=0.0, h=2, p=3)
    avg = compute_normal_form(spec)
    # only p-th order generators appear
    assert all(avg.v[k].is_zero() for k in (1, 2))
    avg.v = {k: FTSeries.zero() for k in avg.v}
    assert transform_forward(avg, 0.3, 1.0, 50.0) == pytest.approx(0.3)
    assert transform_inverse(avg, 0.3, 1.0, 50.0) == pytest.approx(0.3)


def test_transform_out_of_domain():
    avg = compute_normal_form(make_ex1())
    with pytest.raises(OutOfDomain):
        transform_forward(avg, 2 * avg.r_star, 0.0, 2 * avg.t_star)


def _sup_vtilde(avg, t, r):
    g = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    P, S = np.meshgrid(g, g, indexing="ij")
    total = 0.0 * P
    for k, vk in avg.v.items():
        total = total + t ** (-k / avg.q) * vk.eval(r + 0 * P, P, S)
    return np.abs(total).max()


def test_transform_decay_rate(rng):
    q = 2
    spec = random_spec(rng, q=q, p=3)
    avg = compute_normal_form(spec)
    ts = np.geomspace(1e4, 1e8, 20)
    sup = [_sup_vtilde(avg, t, 0.3) for t in ts]
    assert fit_decay_exponent(ts, sup).slope == pytest.approx(-1 / q, abs=0.02)


def test_vtilde_first_part_vanishes_with_r(rng):
    spec = random_spec(rng, q=2, p=3)
    avg = compute_normal_form(spec)
    for k in range(1, spec.p):
        assert np.abs(avg.v[k].coeffs[:, :, 0]).max() < 1e-12
    t = 10.0 * avg.t_star
    ratios = []
    for r in (1e-2, 1e-3, 1e-4):
        rest = sum(t ** (-k / avg.q) * avg.v[k].eval(r, 0.7, spec.phase(t)) for k in range(1, spec.p))
        ratios.append(abs(rest) / r)
    assert max(ratios) < 10 * min(ratios) + 1e-12


# residual along trajectories -----------------------------------------------------


def _ex1_traj(spec, t0=10.0, t1=1e5):
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-14, sample_grid=4000)
    return integrate_cartesian(spec, (0.3, 0.0), t0, t1, cfg)


def test_residual_decay_ex1():
    spec = make_ex1(h=2, p=3)
    traj = _ex1_traj(spec)
    fit3 = residual_along_trajectory(spec, compute_normal_form(spec, N=3), traj, window=(1e2, 1e5))
    assert fit3.slope <= -(3 + 1) / 2 + 0.25
    fit5 = residual_along_trajectory(spec, compute_normal_form(spec, N=5), traj, window=(1e2, 1e5))
    assert fit5.slope < fit3.slope


def test_residual_unperturbed_is_zero():
    f = FTSeries.zero()
    spec = make_ex1(alpha0=0, alpha1=0, beta0=0, beta1=0, gamma0=1.0, gamma1=0.0)
    avg = compute_normal_form(spec)
    empty = SystemSpec(omega=spec.omega, q=2, p=3, f_terms={}, g_terms={}, phase=spec.phase, r0=spec.r0)
    avg.spec = empty
    avg.v = {k: f for k in avg.v}
    avg.Lambda = {k: RadialSeries.zero() for k in avg.Lambda}
    from oscavg.averaging import residual_series

    t = np.geomspace(1, 1e3, 50)
    res = residual_series(avg, t, 0.5 + 0 * t, t.copy())
    assert np.all(res == 0.0)
