"""Truncated asymptotic solutions of the averaged radial equation ``drho/dt = Lambda_N(rho, t)``.

All four families share one recursion. With ``rho = t^(-lead) xi`` the equation
becomes ``xi' = sum_i t^(-i delta) a_i(xi)`` where each ``a_i`` is a polynomial
in ``xi``. Substituting ``xi = sum_k t^(-k delta) xi_k(log t)`` and collecting
powers gives, for every ``k >= 1``, either an algebraic equation
``a' xi_k + b_k = 0`` or a linear ODE ``xi_k' - mu_k xi_k = b_k`` in
``tau = log t``; ``b_k`` is assembled automatically from the lower orders.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from .averaging import AveragedSystem
from .classify import theta_m
from .errors import AssumptionViolated, DegenerateCoefficient
from .series import SETTINGS, LogPolynomial, RadialSeries, lp_solve_linear_ode

KINDS = ("rho1", "rho2", "rho3", "rhom")


@dataclass(frozen=True)
class AsymptoticSolution:
    """``rho(t) = sum_k t^(-powers[k]) coefficients[k](log t)``."""

    kind: str
    leading_power: float
    step: float
    coefficients: tuple
    powers: tuple
    M: int
    anchor: float
    phase_frequency: float
    t_valid: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if len(self.coefficients) != len(self.powers):
            raise ValueError("coefficients and powers must have equal length")

    def __call__(self, t):
        return eval_solution(self, t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.log(t)
        out = np.zeros_like(t)
        for c, e in zip(self.coefficients, self.powers):
            out = out + t ** (-e - 1.0) * (c.deriv()(tau) - e * c(tau))
        return out

    @property
    def max_log_degree(self) -> int:
        return max(c.degree for c in self.coefficients)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "leading_power": self.leading_power,
            "step": self.step,
            "M": self.M,
            "anchor": self.anchor,
            "phase_frequency": self.phase_frequency,
            "t_valid": self.t_valid,
            "powers": list(self.powers),
            "coefficients": [c.to_list() for c in self.coefficients],
        }


def eval_solution(sol: AsymptoticSolution, t):
    t = np.asarray(t, dtype=float)
    tau = np.log(t)
    out = np.zeros_like(t)
    for c, e in zip(sol.coefficients, sol.powers):
        out = out + t ** (-e) * c(tau)
    return out


def phase_of(sol: AsymptoticSolution, t_from: float, t_to: float, omega: RadialSeries) -> float:
    """``int_{t_from}^{t_to} omega(rho(s)) ds``, integrated in ``u = log s``."""
    if t_to < t_from:
        return -phase_of(sol, t_to, t_from, omega)
    if t_to == t_from:
        return 0.0

    def integrand(u):
        s = np.exp(u)
        return float(omega(eval_solution(sol, s))) * s

    val, _ = quad(integrand, np.log(t_from), np.log(t_to), limit=500, epsabs=0.0, epsrel=1e-12)
    return float(val)


def truncation_residual(sol: AsymptoticSolution, avg: AveragedSystem, t):
    """``|drho_M/dt - Lambda_N(rho_M, t)|`` along the asymptotic solution."""
    t = np.asarray(t, dtype=float)
    return np.abs(sol.derivative(t) - avg.Lambda_N(eval_solution(sol, t), t))


# generic recursion ---------------------------------------------------------


def _series_mul(a: list, b: list, kmax: int) -> list:
    out = [LogPolynomial.constant(0.0) for _ in range(kmax + 1)]
    for i, ai in enumerate(a):
        if i > kmax or ai.is_zero(0.0):
            continue
        for j, bj in enumerate(b):
            if i + j > kmax:
                break
            if not bj.is_zero(0.0):
                out[i + j] = out[i + j] + ai * bj
    return out


def _rhs_at(shifted: dict, xi: list, E: int) -> LogPolynomial:
    """Coefficient of ``t^(-E delta)`` in ``sum_i t^(-i delta) a_i(xi_0 + U)``."""
    U = [LogPolynomial.constant(0.0)] + list(xi[1:])
    U = U + [LogPolynomial.constant(0.0)] * max(0, E + 1 - len(U))
    U = U[: E + 1]
    total = LogPolynomial.constant(0.0)
    power = [LogPolynomial.constant(1.0)] + [LogPolynomial.constant(0.0)] * E
    lmax = max((s.trunc_order for s in shifted.values()), default=0)
    for l in range(0, min(E, lmax) + 1):
        if l > 0:
            power = _series_mul(power, U, E)
        for i, a in shifted.items():
            e = E - i
            if e < 0 or l > a.trunc_order or a[l] == 0.0:
                continue
            if not power[e].is_zero(0.0):
                total = total + power[e] * a[l]
    return total


def _lhs_at(xi: list, E: int, L: int, delta: float) -> LogPolynomial:
    """Coefficient of ``t^(-E delta)`` in ``d/dt sum_k t^(-k delta) xi_k(log t)``."""
    k = E - L
    if k < 0 or k >= len(xi):
        return LogPolynomial.constant(0.0)
    return xi[k].deriv() - xi[k] * (k * delta)


def solve_graded(a: dict, delta: Fraction, anchor: float, K: int, tau0: float = 0.0, threshold: float | None = None):
    """Solve ``xi' = sum_i t^(-i delta) a_i(xi)`` for ``xi = sum_{k<=K} t^(-k delta) xi_k``.

    ``a`` maps grid indices to polynomials in ``xi``. Returns ``(xi, info)``
    where ``info`` records the leading index, the linear coefficient and the
    right-hand sides ``b_k``.
    """
    thr = SETTINGS.zero_threshold if threshold is None else threshold
    L = Fraction(1) / delta
    if L.denominator != 1:
        raise ValueError("1/delta must be an integer")
    L = int(L)
    dval = float(delta)
    shifted = {i: s.shift(anchor) for i, s in a.items() if not s.is_zero(0.0)}
    if not shifted:
        raise AssumptionViolated("right-hand side vanishes identically")
    i0 = min(i for i, s in shifted.items() if not s.is_zero(thr))
    lead = shifted[i0]
    if i0 <= L and abs(lead[0]) > max(thr, 1e-9 * max(1.0, np.max(np.abs(lead.coeffs)))):
        raise AssumptionViolated(f"anchor {anchor!r} is not a zero of the leading coefficient a_{i0}")
    a_prime = float(lead[1]) if i0 <= L else 0.0
    if i0 < L and abs(a_prime) <= thr:
        raise DegenerateCoefficient(f"a_{i0}'(anchor) vanishes")
    base = min(i0, L)
    xi = [LogPolynomial.constant(anchor)]
    b_list, cases = [], []
    for k in range(1, K + 1):
        trial = xi + [LogPolynomial.constant(0.0)]
        E = base + k
        b = _rhs_at(shifted, trial, E) - _lhs_at(trial, E, L, dval)
        b_list.append(b)
        if i0 < L:
            xk = b * (-1.0 / a_prime)
            cases.append("algebraic")
        else:
            mu = a_prime + k * dval
            if abs(mu) <= thr:
                xk = lp_solve_linear_ode(0.0, b, "marginal", tau0)
                cases.append("marginal")
            else:
                xk = lp_solve_linear_ode(mu, b, "integral")
                cases.append("integral")
        xi.append(xk)
    info = {"i0": i0, "L": L, "a_prime": a_prime, "b": b_list, "cases": cases}
    return xi, info


def _grid_index(e: Fraction, delta: Fraction) -> int:
    idx = e / delta
    if idx.denominator != 1:
        raise AssumptionViolated(f"exponent {e} is off the grid of step {delta}")
    return int(idx)


def _scaled_coefficients(avg: AveragedSystem, lead: Fraction, delta: Fraction, threshold: float) -> dict:
    """Grid coefficients of ``t^lead Lambda_N(t^(-lead) xi, t) + lead xi / t``."""
    q = avg.q
    R = max(lam.trunc_order for lam in avg.Lambda.values())
    acc: dict[int, np.ndarray] = {}
    for k, lam in avg.Lambda.items():
        for j in range(lam.trunc_order + 1):
            c = lam[j]
            if abs(c) <= threshold:
                continue
            e = Fraction(k, q) + (j - 1) * lead
            if e < 0:
                raise AssumptionViolated(f"term rho^{j} of Lambda_{k} dominates the rescaling")
            i = _grid_index(e, delta)
            acc.setdefault(i, np.zeros(R + 1))[j] += c
    if lead:
        i = _grid_index(Fraction(1), delta)
        acc.setdefault(i, np.zeros(R + 1))[1] += float(lead)
    return {i: RadialSeries(c, R) for i, c in acc.items()}


def _solution(kind, lead, delta, xi, powers, M, anchor, omega_at, avg, info):
    return AsymptoticSolution(
        kind=kind,
        leading_power=float(lead),
        step=float(delta),
        coefficients=tuple(xi),
        powers=tuple(float(p) for p in powers),
        M=M,
        anchor=float(anchor),
        phase_frequency=float(avg.spec.omega(omega_at)),
        t_valid=float(avg.t_star),
        meta=info,
    )


def _thr(threshold):
    return SETTINGS.zero_threshold if threshold is None else threshold


def build_rho1(avg: AveragedSystem, n: int, p: int, q: int, M: int, threshold: float | None = None) -> AsymptoticSolution:
    """Decaying solution ``t^(-nu0) sum_k t^(-k/q) xi_k(log t)`` for a linear leading coefficient."""
    thr = _thr(threshold)
    nu0 = Fraction(p - n, q)
    delta = Fraction(1, q)
    lam_n = avg.Lambda[n][1]
    eff = lam_n + (float(nu0) if n == q else 0.0)
    if abs(eff) <= thr:
        raise DegenerateCoefficient("lambda_n + delta_{n,q} nu0 vanishes")
    xi0 = -avg.spec.mu_p / eff
    a = _scaled_coefficients(avg, nu0, delta, thr)
    xi, info = solve_graded(a, delta, xi0, M, np.log(avg.t_star), thr)
    powers = [nu0 + k * delta for k in range(M + 1)]
    return _solution("rho1", nu0, delta, xi, powers, M, xi0, 0.0, avg, info)


def build_rho2(avg: AveragedSystem, rho0: float, p: int, q: int, M: int, threshold: float | None = None) -> AsymptoticSolution:
    """Solution ``rho0 + sum_k t^(-k/q) xi_k(log t)`` near a simple zero of ``Lambda_p``."""
    thr = _thr(threshold)
    lam = avg.Lambda[p]
    if abs(lam(rho0)) > 1e-8:
        raise AssumptionViolated(f"Lambda_p({rho0}) = {lam(rho0):.3e} is not zero")
    if abs(lam.deriv()(rho0)) <= thr:
        raise DegenerateCoefficient("Lambda_p'(rho0) vanishes")
    delta = Fraction(1, q)
    a = {k: lam_k for k, lam_k in avg.Lambda.items()}
    xi, info = solve_graded(a, delta, rho0, M, np.log(avg.t_star), thr)
    powers = [k * delta for k in range(M + 1)]
    return _solution("rho2", 0, delta, xi, powers, M, rho0, rho0, avg, info)


def build_rho3(avg: AveragedSystem, rho0: float, n: int, q: int, M: int, threshold: float | None = None) -> AsymptoticSolution:
    """Solution ``rho0 + sum_{k>=1} t^(-(n-q+k-1)/q) rho_k`` for ``n > q``.

    Coefficients are constants; ``M`` counts the terms after ``rho0``.
    """
    thr = _thr(threshold)
    if n <= q:
        raise AssumptionViolated("the neutral expansion needs n > q")
    if abs(avg.Lambda[n](rho0)) <= thr:
        raise AssumptionViolated(f"Lambda_n({rho0}) vanishes")
    delta = Fraction(1, q)
    a = {k: lam_k for k, lam_k in avg.Lambda.items()}
    K = n - q + M - 1 if M > 0 else 0
    xi, info = solve_graded(a, delta, rho0, K, np.log(avg.t_star), thr)
    keep = [0] + list(range(n - q, K + 1)) if M > 0 else [0]
    coeffs = [xi[k] for k in keep]
    powers = [k * delta for k in keep]
    return _solution("rho3", 0, delta, coeffs, powers, M, rho0, rho0, avg, info)


def rhom_step(n: int, d: int, m: int, p: int, q: int) -> Fraction:
    th = theta_m(n, d, m, p, q)
    return Fraction(1, q * (th * q).denominator)


def build_rhom(avg: AveragedSystem, root: float, n: int, d: int, m: int, p: int, q: int, M: int, threshold: float | None = None) -> AsymptoticSolution:
    """Strongly nonlinear solution ``t^(-theta_m) sum_k t^(-k delta) xi_k(log t)`` anchored at a root of ``P``."""
    thr = _thr(threshold)
    th = theta_m(n, d, m, p, q)
    delta = rhom_step(n, d, m, p, q)
    a = _scaled_coefficients(avg, th, delta, thr)
    xi, info = solve_graded(a, delta, root, M, np.log(avg.t_star), thr)
    powers = [th + k * delta for k in range(M + 1)]
    return _solution("rhom", th, delta, xi, powers, M, root, 0.0, avg, info)
