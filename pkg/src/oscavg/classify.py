"""Regime classification of an averaged system and per-theorem stability verdicts."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .averaging import AveragedSystem
from .errors import AssumptionViolated
from .series import SETTINGS, RadialSeries

STABILITY_CLASSES = (
    "exponentially stable",
    "polynomially stable",
    "neutrally stable",
    "unstable",
    "escape",
    "bounded",
    "degenerate",
)


@dataclass
class Verdict:
    theorem_tag: str
    stability: str
    predicted_decay_exponent: float | None = None
    solution: str | None = None
    anchor: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.stability not in STABILITY_CLASSES:
            raise ValueError(f"unknown stability class {self.stability!r}")


@dataclass
class RegimeReport:
    n: int
    p: int
    q: int
    region: str
    mu_p: float
    lambda_n: float | None = None
    nu0: float | None = None
    nonlinear: dict | None = None
    equilibria: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    zero_threshold: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def verdict(self, tag: str) -> Verdict | None:
        for v in self.verdicts:
            if v.theorem_tag == tag:
                return v
        return None


def _thr(threshold):
    return SETTINGS.zero_threshold if threshold is None else threshold


def find_leading_index(avg: AveragedSystem, threshold: float | None = None) -> int:
    thr = _thr(threshold)
    for k in sorted(avg.Lambda):
        if not avg.Lambda[k].is_zero(thr):
            return k
    raise AssumptionViolated("all computed Lambda_k vanish")


def classify(n: int, p: int, q: int) -> str:
    if not 1 <= n <= p:
        raise ValueError(f"need 1 <= n <= p, got n={n}, p={p}")
    if n > q:
        return "Q3"
    return "Q1" if n < p else "Q2"


def find_roots(func, lo: float, hi: float, intervals: int = 1000, xtol: float = 1e-12):
    """Sign-change scan plus Brent refinement.

    Returns ``(roots, suspects)`` where ``suspects`` are grid points at which
    ``|func|`` has a local minimum close to zero without a sign change
    (possible double roots, left without a verdict).
    """
    xs = np.linspace(lo, hi, intervals + 1)
    ys = np.array([func(x) for x in xs])
    roots = []
    for i in range(intervals):
        a, b = ys[i], ys[i + 1]
        if a == 0.0:
            roots.append(float(xs[i]))
        elif a * b < 0:
            roots.append(float(brentq(func, xs[i], xs[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)))
    if ys[-1] == 0.0:
        roots.append(float(xs[-1]))
    scale = max(np.abs(ys).max(), 1.0)
    suspects = []
    for i in range(1, intervals):
        if abs(ys[i]) < abs(ys[i - 1]) and abs(ys[i]) < abs(ys[i + 1]) and ys[i - 1] * ys[i + 1] > 0:
            if abs(ys[i]) < 1e-6 * scale and not any(abs(xs[i] - r) < 2 * (hi - lo) / intervals for r in roots):
                suspects.append(float(xs[i]))
    return sorted(set(roots)), suspects


def _leading_power(series: RadialSeries, thr: float) -> int:
    return series.valuation(thr)


def analyze_q1_linear(avg: AveragedSystem, n: int, p: int, q: int, threshold: float | None = None):
    """Verdicts for a linear leading coefficient ``Lambda_n = lambda_n rho + ...``.

    Returns ``(lambda_n, nu0, verdicts)``.
    """
    thr = _thr(threshold)
    lam = avg.Lambda[n]
    if abs(lam[0]) > thr:
        raise AssumptionViolated(f"Lambda_{n}(0) = {lam[0]:.3e} is nonzero")
    lam_n = lam[1]
    if abs(lam_n) <= thr:
        raise AssumptionViolated(f"Lambda_{n} has no linear part; use the strongly nonlinear analysis")
    nu0 = (p - n) / q
    eff = lam_n + (nu0 if n == q else 0.0)
    verdicts = []
    if abs(eff) < 10 * thr:
        verdicts.append(Verdict("Th2", "degenerate", None, "rho1", None, "lambda_n + delta_{n,q} nu0 = 0; theorems silent"))
    elif eff < 0:
        cls = "exponentially stable" if n < q else "polynomially stable"
        xi0 = -avg.spec.mu_p / eff
        verdicts.append(Verdict("Th2", cls, nu0, "rho1", xi0, "sup t^nu0 |r - rho1| bounded"))
    else:
        xi0 = -avg.spec.mu_p / eff
        verdicts.append(Verdict("Lem1u", "unstable", nu0, "rho1", xi0, "weighted deviation t^nu0 |r - rho1_M| exceeds eps"))
    if n == q and lam_n < 0:
        verdicts.append(Verdict("ThDop", "bounded", 0.0, None, 0.0, "|r(t)| stays small for small initial amplitude"))
    return lam_n, nu0, verdicts


def theta_m(n: int, d: int, m: int, p: int, q: int) -> Fraction:
    m_star = Fraction(p - n, p - n - d)
    if m <= m_star:
        return Fraction(p - n, q * m)
    return Fraction(d, q * (m - 1))


def p_polynomial(lam_nm: float, lam_nd: float, mu_p: float, n: int, d: int, m: int, p: int, q: int) -> np.ndarray:
    """Coefficients (ascending powers of ``z``) of the leading balance polynomial."""
    m_star = Fraction(p - n, p - n - d)
    th = float(theta_m(n, d, m, p, q))
    lin = lam_nd + (th if n + d == q else 0.0)
    c = np.zeros(m + 1)
    c[m] = lam_nm
    if m < m_star:
        c[0] = mu_p
    elif m == m_star:
        c[1] += lin
        c[0] = mu_p
    else:
        c[1] += lin
    return c


def analyze_q1_nonlinear(avg: AveragedSystem, n: int, p: int, q: int, threshold: float | None = None, root_range: float = 100.0):
    """Strongly nonlinear leading coefficient ``Lambda_n = lambda_{n,m} rho^m + ...``.

    Returns ``(record, verdicts, notes)``.
    """
    thr = _thr(threshold)
    lam = avg.Lambda
    m = _leading_power(lam[n], thr)
    if m < 2 or m > lam[n].trunc_order:
        raise AssumptionViolated(f"Lambda_{n} is not strongly nonlinear at the origin (leading power {m})")
    lam_nm = lam[n][m]
    d = None
    for k in range(n + 1, max(lam) + 1):
        if k not in lam:
            continue
        v = _leading_power(lam[k], thr)
        if v == 1:
            d = k - n
            break
        if v < m:
            raise AssumptionViolated(f"Lambda_{k} = O(rho^{v}) breaks the O(rho^m) requirement below n+d")
    if d is None:
        raise AssumptionViolated("no index n+d with a nonzero linear coefficient within the computed orders")
    if n + d >= p:
        raise AssumptionViolated(f"linear index n+d={n + d} is not below p={p}")
    lam_nd = lam[n + d][1]
    mu_p = avg.spec.mu_p
    m_star = Fraction(p - n, p - n - d)
    th = theta_m(n, d, m, p, q)
    coeffs = p_polynomial(lam_nm, lam_nd, mu_p, n, d, m, p, q)
    Pz = np.polynomial.Polynomial(coeffs)
    dP = Pz.deriv()
    real_roots = [float(z.real) for z in Pz.roots() if abs(z.imag) <= 1e-9 * max(1.0, abs(z))]
    # polish the algebraic roots with a bracketing solver
    polished, suspects = find_roots(Pz, -root_range, root_range, intervals=20000)
    roots = []
    for z in sorted(set(np.round(real_roots, 9))):
        near = [r for r in polished if abs(r - z) < 1e-6]
        zz = near[0] if near else float(z)
        roots.append({"z_m": zz, "P_prime": float(dP(zz))})
    notes = []
    in_q1 = (n + d) < p and (n + d) <= q
    notes.append(
        "ThM is stated for (n+d,p) in Q2 while LemM needs (n+d,p) in Q1; "
        f"the Q1 condition is used here and holds: {in_q1}"
    )
    verdicts = []
    for root in roots:
        pp = root["P_prime"]
        if abs(pp) <= 10 * thr:
            verdicts.append(Verdict("ThM", "degenerate", None, "rhom", root["z_m"], "P'(z_m) = 0; (Pmas) fails"))
        elif pp < 0 and in_q1:
            verdicts.append(Verdict("ThM", _rhom_class(n, d, m, p, q), float(th), "rhom", root["z_m"], "sup t^theta_m |r - rhom| bounded"))
    for z in suspects:
        if not any(abs(z - r["z_m"]) < 1e-3 for r in roots):
            notes.append(f"possible degenerate root of P near z={z:.6g}")
    record = {
        "m": int(m),
        "d": int(d),
        "lambda_nm": float(lam_nm),
        "lambda_nd": float(lam_nd),
        "m_star": float(m_star),
        "theta_m": float(th),
        "P_coeffs": [float(c) for c in coeffs],
        "roots": roots,
    }
    return record, verdicts, notes


def rhom_grid(n: int, d: int, m: int, p: int, q: int):
    """Grid step ``delta`` (as a Fraction) and leading index of the rescaled equation.

    Every exponent ``k/q + (j-1) theta_m`` and the ``1/t`` term must lie on the
    grid, so ``delta = 1/(q * den(q theta_m))``.
    """
    th = theta_m(n, d, m, p, q)
    delta = Fraction(1, q * (th * q).denominator)
    e_nm = Fraction(n, q) + (m - 1) * th
    e_nd = Fraction(n + d, q)
    e_mu = Fraction(p, q) - th
    lead = min(e_nm, e_nd, e_mu, Fraction(1))
    return delta, int(lead / delta)


def _rhom_class(n, d, m, p, q):
    delta, i0 = rhom_grid(n, d, m, p, q)
    return "polynomially stable" if i0 * delta == 1 else "exponentially stable"


def analyze_q2(avg: AveragedSystem, p: int, q: int, r_star: float | None = None, intervals: int = 1000, threshold: float | None = None):
    """Roots of ``Lambda_p`` inside ``(-r_star, r_star)`` and their verdicts.

    Returns ``(equilibria, verdicts, notes)``.
    """
    thr = _thr(threshold)
    r_star = avg.r_star if r_star is None else r_star
    lam = avg.Lambda[p]
    dlam = lam.deriv()
    roots, suspects = find_roots(lam, -r_star, r_star, intervals)
    roots = [z for z in roots if 0 < abs(z) < r_star]
    equilibria, verdicts, notes = [], [], []
    for z in roots:
        d = float(dlam(z))
        equilibria.append({"rho0": z, "Lambda_prime": d})
        if abs(d) <= 10 * thr:
            verdicts.append(Verdict("Th3", "degenerate", None, "rho2", z, "Lambda_p'(rho0) = 0"))
        elif d < 0:
            cls = "exponentially stable" if p < q else "polynomially stable"
            verdicts.append(Verdict("Th3", cls, abs(d), "rho2", z, "t^kappa |r - rho2| bounded for any kappa in (0, |Lambda_p'(rho0)|)"))
        else:
            verdicts.append(Verdict("Lem2u", "unstable", 0.0, "rho2", z, "plain deviation |r - rho2_M| grows"))
    for z in suspects:
        notes.append(f"possible degenerate root of Lambda_p near rho={z:.6g}")
    if not roots and not suspects:
        verdicts.append(Verdict("ThUnst", "escape", None, None, None, "Lambda_p has no zero in |rho| < r_star"))
    return equilibria, verdicts, notes


def analyze_q3(avg: AveragedSystem, n: int, rho0: float, threshold: float | None = None):
    """Verdict for the neutral regime anchored at ``rho0``; ``None`` if the sign condition fails."""
    thr = _thr(threshold)
    lam = avg.Lambda[n]
    val = float(lam(rho0))
    d = float(lam.deriv()(rho0))
    if abs(val) <= thr:
        raise AssumptionViolated(f"Lambda_{n}(rho0) = 0 at rho0={rho0}")
    if abs(d) <= thr:
        raise AssumptionViolated(f"Lambda_{n}'(rho0) = 0 at rho0={rho0}")
    eq = {"rho0": float(rho0), "Lambda_n": val, "Lambda_prime": d}
    if d < 0:
        return eq, Verdict("Th4", "neutrally stable", 0.0, "rho3", float(rho0), "sup |r - rho3| stays small")
    return eq, None


def default_q3_anchor(avg: AveragedSystem, n: int, grid: int = 1000, threshold: float | None = None) -> float | None:
    """Midpoint of the widest interval of ``(0, r_star)`` on which ``Lambda_n' < 0`` and ``Lambda_n != 0``."""
    thr = _thr(threshold)
    lam = avg.Lambda[n]
    xs = np.linspace(0, avg.r_star, grid + 1)[1:-1]
    ok = (lam.deriv()(xs) < -thr) & (np.abs(lam(xs)) > 1e3 * thr)
    best, cur = None, None
    for x, good in zip(xs, ok):
        if good:
            cur = [x, x] if cur is None else [cur[0], x]
            if best is None or cur[1] - cur[0] > best[1] - best[0]:
                best = list(cur)
        else:
            cur = None
    if best is None:
        return None
    return float(0.5 * (best[0] + best[1]))


def analyze(avg: AveragedSystem, rho0_q3: float | None = None, threshold: float | None = None) -> RegimeReport:
    """Full classification pipeline."""
    thr = _thr(threshold)
    p, q = avg.p, avg.q
    n = find_leading_index(avg, thr)
    region = classify(n, p, q)
    rep = RegimeReport(n=n, p=p, q=q, region=region, mu_p=float(avg.spec.mu_p), zero_threshold=thr)
    if region == "Q1":
        rep.nu0 = (p - n) / q
        try:
            lam_n, _, verdicts = analyze_q1_linear(avg, n, p, q, thr)
            rep.lambda_n = float(lam_n)
            rep.verdicts.extend(verdicts)
        except AssumptionViolated:
            try:
                record, verdicts, notes = analyze_q1_nonlinear(avg, n, p, q, thr)
            except AssumptionViolated as exc:
                rep.notes.append(f"no Q1 verdict: {exc}")
            else:
                rep.nonlinear = record
                rep.verdicts.extend(verdicts)
                rep.notes.extend(notes)
    elif region == "Q2":
        eq, verdicts, notes = analyze_q2(avg, p, q, threshold=thr)
        rep.equilibria.extend(eq)
        rep.verdicts.extend(verdicts)
        rep.notes.extend(notes)
        if any(v.theorem_tag == "Lem2u" for v in verdicts):
            rep.notes.append("Lem2u reuses the Q1 weight nu0; the escape probe measures the unweighted deviation")
    else:
        rho0 = default_q3_anchor(avg, n, threshold=thr) if rho0_q3 is None else rho0_q3
        if rho0 is None:
            rep.notes.append("no admissible rho0 with Lambda_n'(rho0) < 0 in (0, r_star)")
        else:
            try:
                eq, verdict = analyze_q3(avg, n, rho0, thr)
            except AssumptionViolated as exc:
                rep.notes.append(f"no Q3 verdict: {exc}")
            else:
                rep.equilibria.append(eq)
                if verdict is not None:
                    rep.verdicts.append(verdict)
    return rep
