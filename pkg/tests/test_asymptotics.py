from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from oscavg import compute_normal_form, make_ex1, make_ex2
from oscavg.asymptotics import (
    AsymptoticSolution,
    build_rho1,
    build_rho2,
    build_rho3,
    build_rhom,
    eval_solution,
    phase_of,
    solve_graded,
    truncation_residual,
)
from oscavg.averaging import AveragedSystem
from oscavg.errors import AssumptionViolated, DegenerateCoefficient
from oscavg.series import LogPolynomial, RadialSeries
from oscavg.simulate import fit_decay_exponent


def synthetic(lams, q, p, t_star=10.0):
    """Averaged system given directly by its coefficients ``{k: [c0, c1, ...]}``."""
    Lambda = {k: RadialSeries.from_coeffs(c) for k, c in lams.items()}
    spec = SimpleNamespace(q=q, p=p, mu_p=Lambda[p][0], omega=RadialSeries.constant(1.0))
    return AveragedSystem(spec, max(lams), Lambda, {}, {}, {}, set(), 1.0, t_star, 1.0)


RHO1_LAMS = {1: [0, -1.0, 0.3], 2: [0, 0.4, 0.2], 3: [0.5, 0.1], 4: [0.3, 1.0], 5: [0.2]}
RHO2_LAMS = {1: [0.0], 2: [0.5, -0.75, 0.2], 3: [0.4, 0.3, 0.1]}
RHO3_LAMS = {1: [0.0], 2: [0.0], 3: [0.5, -0.5, 0.2], 4: [0, 0.3], 5: [0.1, 0, 0.1]}


def _rho2_root():
    return brentq(lambda z: RadialSeries.from_coeffs(RHO2_LAMS[2])(z), 0.0, 1.0)


@pytest.fixture(scope="module")
def ex2_avg():
    return compute_normal_form(make_ex2())


def _builders(ex2_avg):
    a1 = synthetic(RHO1_LAMS, 2, 3)
    a2 = synthetic(RHO2_LAMS, 2, 2)
    a3 = synthetic(RHO3_LAMS, 2, 3)
    return {
        "rho1": (a1, lambda M: build_rho1(a1, 1, 3, 2, M)),
        "rho2": (a2, lambda M: build_rho2(a2, _rho2_root(), 2, 2, M)),
        "rho3": (a3, lambda M: build_rho3(a3, 0.5, 3, 2, M)),
        "rhom": (ex2_avg, lambda M: build_rhom(ex2_avg, 2.0, 1, 1, 3, 3, 3, M)),
    }


# anchors ---------------------------------------------------------------------------


@pytest.mark.parametrize("beta0", [-2.0, -3.0, -1.5])
def test_rho1_anchor_ex1(beta0):
    avg = compute_normal_form(make_ex1(h=2, p=3, beta0=beta0, gamma0=1.0))
    sol = build_rho1(avg, 2, 3, 2, 2)
    assert sol.coefficients[0](0.0) == pytest.approx(-1.0 / (beta0 + 1), abs=1e-10)
    assert sol.leading_power == 0.5 and sol.step == 0.5
    assert sol.phase_frequency == 1.0


def test_rho1_no_logs_below_q():
    avg = compute_normal_form(make_ex1(h=1, p=3, beta0=-2.0, gamma0=1.0))
    sol = build_rho1(avg, 1, 3, 2, 3)
    assert sol.coefficients[0](0.0) == pytest.approx(-1.0 / -2.0, abs=1e-10)
    assert sol.max_log_degree == 0
    assert sol.leading_power == 1.0


def test_rho1_logs_only_from_marginal_hits():
    avg = synthetic(RHO1_LAMS, 2, 3)
    sol = build_rho1(avg, 1, 3, 2, 3)
    assert "marginal" not in sol.meta["cases"]
    assert sol.max_log_degree == 0


def test_rho1_first_two_rhs():
    """n < q - 1: the first right-hand sides match the closed forms."""
    lam, c2, a, b, c, mu = -0.8, 0.3, 0.7, 0.2, 0.4, 0.5
    avg = synthetic({1: [0, lam, c2], 2: [0, a, b], 3: [mu, c]}, q=4, p=3)
    sol = build_rho1(avg, 1, 3, 4, 2)
    xi0 = -mu / lam
    b1 = a * xi0
    xi1 = -b1 / lam
    b2 = c2 * xi0**2 + c * xi0 + a * xi1
    got = sol.meta["b"]
    assert got[0](0.0) == pytest.approx(b1, abs=1e-12)
    assert got[1](0.0) == pytest.approx(b2, abs=1e-12)
    assert sol.coefficients[1](0.0) == pytest.approx(xi1, abs=1e-12)
    assert sol.coefficients[2](0.0) == pytest.approx(-b2 / lam, abs=1e-12)


def test_solve_graded_second_derivative_term():
    # a_1 = xi^2 - 1 has a nonzero second derivative at the anchor 1
    a = {1: RadialSeries.from_coeffs([-1, 0, 1]), 2: RadialSeries.from_coeffs([0.3, 0.5])}
    from fractions import Fraction

    xi, info = solve_graded(a, Fraction(1, 6), 1.0, 2)
    xi1 = -(0.3 + 0.5) / 2.0
    assert xi[1](0.0) == pytest.approx(xi1)
    b2 = 0.5 * xi1 + 2.0 / 2 * xi1**2
    assert info["b"][1](0.0) == pytest.approx(b2)


def test_rho1_degenerate():
    avg = compute_normal_form(make_ex1(h=2, p=3, beta0=-1.0))
    with pytest.raises(DegenerateCoefficient):
        build_rho1(avg, 2, 3, 2, 2)


def test_rho2_ex1_case2():
    avg = compute_normal_form(make_ex1(h=2, p=2, beta0=-1.5, gamma0=1.0))
    sol = build_rho2(avg, 2 / 3, 2, 2, 2)
    assert sol.coefficients[0](0.0) == pytest.approx(2 / 3, abs=1e-12)
    assert sol.phase_frequency == 1.0
    lam3 = avg.Lambda[3](2 / 3)
    assert sol.meta["b"][0](0.0) == pytest.approx(lam3, abs=1e-12)
    assert sol.coefficients[1](0.0) == pytest.approx(-lam3 / (-0.75 + 0.5), abs=1e-12)


def test_rho2_synthetic_first_coefficient():
    avg = synthetic(RHO2_LAMS, 2, 2)
    z = _rho2_root()
    sol = build_rho2(avg, z, 2, 2, 1)
    d = RadialSeries.from_coeffs(RHO2_LAMS[2]).deriv()(z)
    b1 = RadialSeries.from_coeffs(RHO2_LAMS[3])(z)
    assert sol.coefficients[1](0.0) == pytest.approx(-b1 / (d + 0.5), abs=1e-12)


def test_rho2_preconditions():
    avg = synthetic({1: [0.0], 2: [1.0, -2.0, 1.0]}, 2, 2)
    with pytest.raises(DegenerateCoefficient):
        build_rho2(avg, 1.0, 2, 2, 1)
    with pytest.raises(AssumptionViolated):
        build_rho2(avg, 0.5, 2, 2, 1)


def test_rho3_ex1_case4():
    avg = compute_normal_form(make_ex1(h=3, p=3, beta0=-1.0, gamma0=1.0))
    sol = build_rho3(avg, 0.5, 3, 2, 3)
    assert sol.coefficients[0](0.0) == 0.5
    assert sol.powers[:2] == (0.0, 0.5)
    assert sol.coefficients[1](0.0) == pytest.approx(-0.5, abs=1e-12)
    assert sol.max_log_degree == 0


@pytest.mark.parametrize("n,q,c", [(3, 2, 0.7), (5, 3, -0.4), (4, 1, 1.3)])
def test_rho3_constant_lambda_closed_form(n, q, c):
    lams = {k: [0.0] for k in range(1, n)}
    lams[n] = [c]
    avg = synthetic(lams, q, n)
    rho0 = 0.3
    sol = build_rho3(avg, rho0, n, q, 3)
    t = np.geomspace(10, 1e6, 7)
    exact = rho0 - q * c / (n - q) * t ** (-(n - q) / q)
    assert np.allclose(eval_solution(sol, t), exact, rtol=0, atol=1e-14)


def test_rho3_zeroth_truncation():
    avg = synthetic(RHO3_LAMS, 2, 3)
    sol = build_rho3(avg, 0.5, 3, 2, 0)
    assert len(sol.coefficients) == 1
    assert np.all(eval_solution(sol, np.geomspace(1, 1e8, 5)) == 0.5)


def test_rhom_ex2(ex2_avg):
    sol = build_rhom(ex2_avg, 2.0, 1, 1, 3, 3, 3, 3)
    assert sol.coefficients[0](0.0) == pytest.approx(np.sqrt(-4 * 1.0 / -1.0), abs=1e-10)
    assert sol.leading_power == pytest.approx(1 / 6)
    t = 1e12
    assert eval_solution(sol, t) * t ** (1 / 6) == pytest.approx(2.0, rel=1e-2)


def test_solution_serialises(ex2_avg):
    import json

    d = build_rhom(ex2_avg, 2.0, 1, 1, 3, 3, 3, 2).to_dict()
    assert json.loads(json.dumps(d))["kind"] == "rhom"
    assert len(d["powers"]) == len(d["coefficients"]) == 3


def test_kind_checked():
    with pytest.raises(ValueError):
        AsymptoticSolution("rho9", 0.0, 1.0, (LogPolynomial([1.0]),), (0.0,), 0, 1.0, 1.0, 1.0)


# truncation residual and numerical oracle ------------------------------------------


def _residual_slope(sol, avg):
    t = np.geomspace(1e3, 1e7, 40)
    res = truncation_residual(sol, avg, t)
    if res.max() < 1e-13 * np.abs(eval_solution(sol, t)).max() * t[0] ** -1:
        return -np.inf
    return fit_decay_exponent(t, res).slope


@pytest.mark.parametrize("kind", ["rho1", "rho2", "rho3", "rhom"])
def test_residual_improves_with_M(ex2_avg, kind):
    avg, build = _builders(ex2_avg)[kind]
    slopes = [_residual_slope(build(M), avg) for M in (0, 1, 2)]
    assert slopes[0] > slopes[1] > slopes[2]


def test_residual_ex1_case1_nonincreasing():
    avg = compute_normal_form(make_ex1(h=2, p=3, beta0=-2.0))
    slopes = [_residual_slope(build_rho1(avg, 2, 3, 2, M), avg) for M in (0, 1, 2)]
    assert slopes[0] >= slopes[1] >= slopes[2]
    # Lemma-type bound O(t^-(M+n+2)/q) for the leading truncation
    assert slopes[0] <= -(0 + 2 + 2) / 2 + 0.25


def _omitted(build, M, t):
    base = eval_solution(build(M), t)
    for extra in (1, 2, 3):
        diff = eval_solution(build(M + extra), t) - base
        if np.abs(diff).max() > 0:
            return np.abs(diff)
    return np.zeros_like(t)


@pytest.mark.parametrize("kind", ["rho1", "rho2", "rho3", "rhom"])
def test_matches_numerical_solution(ex2_avg, kind):
    """sup over [1e6, 1e8] of the gap to the truncated ODE stays within 3x the first omitted term."""
    avg, build = _builders(ex2_avg)[kind]
    M = 2
    sol = build(M)
    t0, t1 = 1e6, 1e8
    ts = np.geomspace(t0, t1, 60)

    def rhs(u, y):
        t = np.exp(u)
        return [t * avg.Lambda_N(y[0], t)]

    num = solve_ivp(rhs, (np.log(t0), np.log(t1)), [float(eval_solution(sol, t0))], method="DOP853",
                    t_eval=np.log(ts), rtol=1e-13, atol=1e-18).y[0]
    err = np.abs(num - eval_solution(sol, ts))
    bound = 3 * _omitted(build, M, ts).max() + 1e-11 * np.abs(num).max()
    assert err.max() <= bound


# phase ------------------------------------------------------------------------------


def test_phase_constant_solution():
    sol = AsymptoticSolution("rho2", 0.0, 0.5, (LogPolynomial([0.4]),), (0.0,), 0, 0.4, 1.0, 1.0)
    assert phase_of(sol, 3.0, 250.0, RadialSeries.constant(1.0)) == pytest.approx(247.0, rel=1e-12)
    assert phase_of(sol, 250.0, 3.0, RadialSeries.constant(1.0)) == pytest.approx(-247.0, rel=1e-12)


def test_phase_ratio_ex1():
    avg = compute_normal_form(make_ex1(h=2, p=3, beta0=-2.0))
    sol = build_rho1(avg, 2, 3, 2, 2)
    for T in (1e4, 1e6):
        assert phase_of(sol, 1.0, T, avg.spec.omega) / T == pytest.approx(1.0, abs=1e-3)


def test_phase_ratio_ex2(ex2_avg):
    sol = build_rhom(ex2_avg, 2.0, 1, 1, 3, 3, 3, 2)
    ratios = [phase_of(sol, 10.0, T, ex2_avg.spec.omega) / (T - 10.0) for T in (1e4, 1e6, 1e8)]
    assert ratios[0] < ratios[1] < ratios[2] < 1.0
    assert ratios[2] == pytest.approx(1.0, abs=2e-3)
