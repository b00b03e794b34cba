import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscavg.errors import DegenerateCoefficient, NonRealMean, ZeroConstantTerm
from oscavg.series import (
    FTSeries,
    LogPolynomial,
    RadialSeries,
    ft_average,
    ft_diff,
    ft_eval,
    ft_mul,
    lp_solve_linear_ode,
    rs_mul,
    rs_reciprocal,
    series_settings,
)

from conftest import brute_eval, random_ft

R = 8
floats = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
radial = st.lists(floats, min_size=1, max_size=R + 1).map(lambda c: RadialSeries.from_coeffs(c, R))
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _close(a, b, rel=1e-12):
    scale = max(1.0, np.abs(a.coeffs).max(), np.abs(b.coeffs).max())
    return np.abs(a.coeffs - b.coeffs).max() <= rel * scale


def _ft_close(a, b, rel=1e-12):
    d = (a - b).truncate(min(a.trunc_order, b.trunc_order))
    scale = max(1.0, a.max_abs(), b.max_abs())
    return d.max_abs() <= rel * scale


# radial series ----------------------------------------------------------------


def test_rs_difference_of_squares():
    out = rs_mul(RadialSeries.from_coeffs([1, 1]), RadialSeries.from_coeffs([1, -1]))
    assert out.allclose(RadialSeries.from_coeffs([1, 0, -1]))


@given(radial)
def test_rs_identity(a):
    assert rs_mul(RadialSeries.constant(1.0, R), a).allclose(a)


def test_rs_reciprocal_examples():
    assert rs_reciprocal(RadialSeries.constant(2.0)).allclose(RadialSeries.constant(0.5))
    a = RadialSeries.from_coeffs([1, 0, -1 / 16])
    inv = rs_reciprocal(a)
    assert inv.allclose(RadialSeries.from_coeffs([1, 0, 1 / 16, 0, 1 / 256, 0, 1 / 16**3, 0, 1 / 16**4]))
    assert rs_mul(a, inv).allclose(RadialSeries.constant(1.0), atol=1e-15)
    with pytest.raises(ZeroConstantTerm):
        rs_reciprocal(RadialSeries.from_coeffs([0, 1]))


def test_rs_truncation_is_explicit():
    a = RadialSeries.from_coeffs([1, 1], 3)
    b = RadialSeries.from_coeffs([0, 0, 0, 1], 5)
    out = a * b
    assert out.trunc_order == 3
    assert len(out.coeffs) == 4


@given(radial, radial, radial)
def test_rs_ring_axioms(a, b, c):
    assert _close((a * b) * c, a * (b * c))
    assert _close(a * (b + c), a * b + a * c)


@given(radial.filter(lambda a: abs(a[0]) > 0.1))
def test_rs_reciprocal_inverts(a):
    inv = rs_reciprocal(a)
    scale = np.abs(a.coeffs).max() * np.abs(inv.coeffs).max()
    err = np.abs((a * inv).coeffs - RadialSeries.constant(1.0, R).coeffs).max()
    assert err <= 1e-13 * max(1.0, scale)


# Fourier-Taylor series --------------------------------------------------------


def test_ft_mul_examples():
    e = FTSeries.from_modes({(1, 0): [1.0]})  # 2 cos(phi)
    assert ft_mul(FTSeries.trig("cos", 1, 0), FTSeries.trig("cos", 1, 0)).allclose(
        FTSeries.lift(0.5) + FTSeries.trig("cos", 2, 0, 0.5)
    )
    # e^{i phi} e^{-i phi} = 1: for the real pair 2cos(phi) the (0,0) product mode is 2
    assert ft_mul(e, e).mode(0, 0)[0] == pytest.approx(2.0)
    s = FTSeries.trig("sin", 1, 0)
    assert ft_mul(s, s).allclose(FTSeries.lift(0.5) - FTSeries.trig("cos", 2, 0, 0.5))


def test_ft_mul_mean_of_gamma_sin2():
    g0, g1 = 0.7, 1.3
    gamma = FTSeries.lift(g0) + FTSeries.trig("sin", 0, 1, g1)
    s = FTSeries.trig("sin", 1, 0)
    assert ft_average(gamma * s * s)[0] == pytest.approx(g0 / 2, abs=1e-15)


def test_ft_mul_mode_set_is_minkowski_sum(rng):
    a = FTSeries.trig("cos", 1, 1)
    b = FTSeries.trig("cos", 0, 2)
    assert (a * b).mode_set == {-3, -1, 1, 3}


def test_ft_diff_examples():
    phi = 0.37
    d = ft_diff(FTSeries.trig("cos", 1, 0), "phi")
    assert d.allclose(-FTSeries.trig("sin", 1, 0))
    assert ft_diff(FTSeries.trig("cos", 0, 1), "S").allclose(-FTSeries.trig("sin", 0, 1))
    r2 = RadialSeries.from_coeffs([0, 0, 1])
    dr = ft_diff(FTSeries.trig("sin", 1, 0, r2), "r")
    assert dr.allclose(FTSeries.trig("sin", 1, 0, RadialSeries.from_coeffs([0, 2])))
    assert dr.trunc_order == R - 1
    assert ft_eval(d, 1.0, phi, 0.0) == pytest.approx(-np.sin(phi))


def test_ft_average_examples():
    s = FTSeries.trig("sin", 1, 0)
    assert ft_average(s * s)[0] == pytest.approx(0.5)
    assert ft_average(FTSeries.trig("cos", 1, 1)).is_zero()


def test_ft_average_linear_block():
    # -(alpha(S) cos phi - beta(S) sin phi) r sin phi has mean beta0 r / 2
    a0, a1, b0, b1 = 0.3, 0.9, -2.0, 1.1
    alpha = FTSeries.lift(a0) + FTSeries.trig("sin", 0, 1, a1)
    beta = FTSeries.lift(b0) + FTSeries.trig("sin", 0, 1, b1)
    r = FTSeries.lift(RadialSeries.identity())
    term = -((alpha * FTSeries.trig("cos", 1, 0) - beta * FTSeries.trig("sin", 1, 0)) * r * FTSeries.trig("sin", 1, 0))
    mean = ft_average(term)
    assert mean.allclose(RadialSeries.from_coeffs([0, b0 / 2]), atol=1e-15)


def test_ft_average_rejects_complex_mean():
    c = np.zeros((1, 1, R + 1), dtype=complex)
    c[0, 0, 0] = 1j
    with pytest.raises(NonRealMean):
        ft_average(FTSeries(c, R, hermitian=False))


def test_ft_eval_examples():
    assert ft_eval(FTSeries.trig("sin", 1, 0), 0.3, np.pi / 2, 0.0) == pytest.approx(1.0)
    rc = FTSeries.trig("cos", 1, 0, RadialSeries.identity())
    assert ft_eval(rc, 0.5, 0.0, 1.0) == pytest.approx(0.5)


def test_ft_eval_matches_brute_force(rng):
    for _ in range(100):
        a = random_ft(rng)
        r, phi, s = rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)
        ref = brute_eval(a, r, phi, s)
        assert ft_eval(a, r, phi, s) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_ft_eval_vectorised(rng):
    a = random_ft(rng)
    r = rng.uniform(-1, 1, 50)
    phi = rng.uniform(0, 6, 50)
    s = rng.uniform(0, 6, 50)
    out = ft_eval(a, r, phi, s)
    assert out.shape == (50,)
    assert np.allclose(out, [ft_eval(a, *z) for z in zip(r, phi, s)], rtol=1e-13, atol=1e-13)


@given(seeds)
def test_ft_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_ft(rng, a_max=2, b_max=1) for _ in range(3))
    assert _ft_close((a * b) * c, a * (b * c))
    assert _ft_close(a * (b + c), a * b + a * c)


@given(seeds)
def test_ft_hermitian_preserved(seed):
    rng = np.random.default_rng(seed)
    a, b = random_ft(rng), random_ft(rng)
    for out in (a * b, ft_diff(a, "phi"), ft_diff(b, "S"), ft_diff(a, "r"), a - b):
        c = out.coeffs
        assert np.allclose(c, np.conj(c[::-1, ::-1, :]), atol=0)


@given(seeds)
def test_mean_of_angular_derivative_vanishes(seed):
    rng = np.random.default_rng(seed)
    a = random_ft(rng)
    assert ft_average(ft_diff(a, "phi")).is_zero(1e-14)
    assert ft_average(ft_diff(a, "S")).is_zero(1e-14)


def test_clipping_to_mode_bounds():
    with series_settings(k1_bound=2):
        a = FTSeries.trig("cos", 1, 0) + FTSeries.trig("cos", 2, 0)
        out = a * a
        assert out.k1_max == 2
        assert abs(out.mode(2, 0)[0]) > 0


# log polynomials --------------------------------------------------------------


def test_lp_solve_examples():
    # xi' + 2 xi = 1
    assert lp_solve_linear_ode(-2.0, LogPolynomial([1.0]), "algebraic").allclose(LogPolynomial([0.5]))
    # xi' = tau
    assert lp_solve_linear_ode(0.0, LogPolynomial([0.0, 1.0]), "marginal").allclose(LogPolynomial([0, 0, 0.5]))
    # xi' + xi = tau: the polynomial solution is tau - 1
    xi = lp_solve_linear_ode(-1.0, LogPolynomial([0.0, 1.0]), "integral")
    assert xi.allclose(LogPolynomial([-1.0, 1.0]))
    assert (xi.deriv() + xi).allclose(LogPolynomial([0.0, 1.0]))


def test_lp_solve_degenerate():
    with pytest.raises(DegenerateCoefficient):
        lp_solve_linear_ode(0.0, LogPolynomial([1.0]), "algebraic")


def test_lp_marginal_constant_fixed_at_tau0():
    xi = lp_solve_linear_ode(0.0, LogPolynomial([2.0]), "marginal", tau0=3.0)
    assert xi(3.0) == pytest.approx(0.0)
    assert xi.deriv().allclose(LogPolynomial([2.0]))


@given(st.lists(floats, min_size=1, max_size=6), st.floats(min_value=0.05, max_value=5.0), st.booleans())
def test_lp_solve_substitution(coeffs, mag, neg):
    mu = -mag if neg else mag
    b = LogPolynomial(coeffs)
    xi = lp_solve_linear_ode(mu, b, "integral")
    resid = xi.deriv() - xi * mu - b
    assert np.abs(resid.coeffs).max() <= 1e-9 * max(1.0, np.abs(xi.coeffs).max() * abs(mu))


def test_lp_leading_coefficient_nonzero():
    p = LogPolynomial([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert LogPolynomial([0.0, 0.0]).degree == 0
