"""Near-identity averaging of the amplitude equation.

Given ``dr/dt = f``, ``dphi/dt = omega(r) + g/r`` with ``f ~ sum t^(-k/q) f_k``
(and likewise ``g``), this module builds generators ``v_1..v_N`` so that
``rho = r + sum t^(-k/q) v_k(r, phi, S(t))`` obeys
``drho/dt = sum t^(-k/q) Lambda_k(rho) + O(t^(-(N+1)/q))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import brentq

from .errors import (
    InsufficientSamples,
    NoConvergence,
    NonzeroMean,
    OutOfDomain,
    ResonanceDetected,
    SpecValidationError,
)
from .series import SETTINGS, FTSeries, RadialSeries, rs_reciprocal


@dataclass(frozen=True)
class PhaseLaw:
    """``S(t) = s0 t + sum_{k<q} s_k t^(1-k/q) + s_q log t``."""

    s: tuple
    q: int

    def __post_init__(self):
        s = tuple(float(x) for x in self.s)
        if self.q < 1:
            raise SpecValidationError("q must be a positive integer", "(FG)")
        if len(s) != self.q + 1:
            raise SpecValidationError(f"phase law needs q+1={self.q + 1} coefficients, got {len(s)}", "(Sform)")
        if not s[0] > 0:
            raise SpecValidationError("s0 must be positive", "(Sform)")
        object.__setattr__(self, "s", s)

    @property
    def s0(self) -> float:
        return self.s[0]

    def sigma(self, i: int) -> float:
        """Coefficient of ``t^(-i/q)`` in ``dS/dt`` (``i >= 1``)."""
        if i < 1 or i > self.q:
            return 0.0
        if i == self.q:
            return self.s[self.q]
        return (1.0 - i / self.q) * self.s[i]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        q = self.q
        out = self.s[0] * t + self.s[q] * np.log(t)
        for k in range(1, q):
            if self.s[k]:
                out = out + self.s[k] * t ** (1.0 - k / q)
        return out

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.s[0] + 0.0 * t
        for i in range(1, self.q + 1):
            sig = self.sigma(i)
            if sig:
                out = out + sig * t ** (-i / self.q)
        return out


@dataclass
class SystemSpec:
    """Full perturbed system in polar form.

    ``f_terms[k]``/``g_terms[k]`` hold the coefficient of ``t^(-k/q)``. ``cartesian``
    optionally carries an equivalent Cartesian field used by the simulator.
    """

    omega: RadialSeries
    q: int
    p: int
    f_terms: dict
    g_terms: dict
    phase: PhaseLaw
    r0: float = 1.0
    name: str = "custom"
    params: dict = field(default_factory=dict)
    cartesian: object = None
    chart: object = None

    def __post_init__(self):
        if self.phase.q != self.q:
            raise SpecValidationError("phase law q differs from system q", "(Sform)")

    def f(self, k: int) -> FTSeries:
        return self.f_terms.get(k) or FTSeries.zero()

    def g(self, k: int) -> FTSeries:
        return self.g_terms.get(k) or FTSeries.zero()

    @property
    def max_order(self) -> int:
        keys = list(self.f_terms) + list(self.g_terms)
        return max(keys) if keys else 0

    @property
    def mode_set(self) -> set:
        z = {0}
        for term in list(self.f_terms.values()) + list(self.g_terms.values()):
            z |= term.mode_set
        return z

    @property
    def mu_p(self) -> float:
        return float(self.f(self.p).average()[0])

    def validate(self, threshold: float | None = None) -> "SystemSpec":
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        if not self.omega[0] > 0:
            raise SpecValidationError("omega(0) must be positive", "(omega>0)")
        if self.p < 1:
            raise SpecValidationError("p must be a positive integer", "(pFG)")
        for k in range(1, self.p):
            for label, term in (("f", self.f(k)), ("g", self.g(k))):
                lead = np.abs(term.coeffs[:, :, 0]).max()
                if lead > thr:
                    raise SpecValidationError(
                        f"{label}_{k} does not vanish at r=0 (|r^0 coefficient|={lead:.3e}) although k<p={self.p}",
                        "(pFG)",
                    )
        if abs(self.mu_p) <= thr:
            raise SpecValidationError(f"mu_p = <f_p>(0) vanishes for p={self.p}", "(pFG)")
        return self

    # field evaluation ----------------------------------------------------
    def perturbation(self, r, phi, t):
        """``(f, g)`` summed over all stored orders at the given points."""
        t = np.asarray(t, dtype=float)
        s = self.phase(t)
        fv = 0.0
        gv = 0.0
        for k, term in self.f_terms.items():
            fv = fv + t ** (-k / self.q) * term.eval(r, phi, s)
        for k, term in self.g_terms.items():
            gv = gv + t ** (-k / self.q) * term.eval(r, phi, s)
        return fv, gv


def check_nonresonance(spec: SystemSpec, k1_bound: int | None = None, grid: int = 1000, safety: float = 0.9):
    """Margin of ``|k1 omega(0) + k2 s0|`` over the mode grid and the radius ``r_star``.

    Returns a dict with ``margin``, ``argmin`` ``(k1, k2)``, ``r_star`` and the
    scanned ``mode_set``. Raises :class:`ResonanceDetected` when the margin is
    below the zero threshold.
    """
    k1_bound = SETTINGS.k1_bound if k1_bound is None else k1_bound
    s0 = spec.phase.s0
    Z = sorted(spec.mode_set)
    w0 = spec.omega[0]
    best, arg = np.inf, None
    for k1 in range(-k1_bound, k1_bound + 1):
        for k2 in Z:
            if k1 == 0 and k2 == 0:
                continue
            m = abs(k1 * w0 + k2 * s0)
            if m < best:
                best, arg = m, (k1, k2)
    if best <= SETTINGS.zero_threshold:
        raise ResonanceDetected(f"resonance k1*omega(0)+k2*s0=0 at (k1,k2)={arg}", mode=arg, margin=best)
    rs = np.linspace(0.0, spec.r0, grid + 1)
    wr = spec.omega(rs)
    first_bad = spec.r0
    for k1 in range(-k1_bound, k1_bound + 1):
        for k2 in Z:
            if k1 == 0 and k2 == 0:
                continue
            d = k1 * wr + k2 * s0
            bad = np.nonzero((np.sign(d) != np.sign(d[0])) | (np.abs(d) <= SETTINGS.zero_threshold))[0]
            if bad.size:
                first_bad = min(first_bad, rs[bad[0]])
    if first_bad < spec.r0:
        r_star = safety * first_bad
    else:
        r_star = spec.r0
    # omega must also stay positive
    neg = np.nonzero(wr <= 0)[0]
    if neg.size:
        r_star = min(r_star, safety * rs[neg[0]])
    return {"margin": float(best), "argmin": arg, "r_star": float(r_star), "mode_set": Z}


def _denominator(omega: RadialSeries, s0: float, k1: int, k2: int) -> RadialSeries:
    return omega * float(k1) + float(k2) * s0


def solve_homological(F: FTSeries, omega: RadialSeries, s0: float, tol: float | None = None) -> FTSeries:
    """Zero-mean solution of ``(omega(r) d_phi + s0 d_S) v = F``."""
    tol = SETTINGS.zero_threshold if tol is None else tol
    mean = F.mode(0, 0)
    if np.abs(mean).max() > max(tol, 1e-9):
        raise NonzeroMean(f"right-hand side has nonzero mean (max |coeff| {np.abs(mean).max():.3e})")
    A, B = F.k1_max, F.k2_max
    R = F.trunc_order
    out = np.zeros_like(F.coeffs)
    cache = {}
    for i1 in range(2 * A + 1):
        for i2 in range(2 * B + 1):
            k1, k2 = i1 - A, i2 - B
            if k1 == 0 and k2 == 0:
                continue
            c = F.coeffs[i1, i2]
            if not np.any(c != 0):
                continue
            d0 = k1 * omega[0] + k2 * s0
            if abs(d0) <= tol:
                raise ResonanceDetected(f"vanishing denominator at (k1,k2)=({k1},{k2})", mode=(k1, k2), margin=abs(d0))
            if (k1, k2) not in cache:
                cache[(k1, k2)] = rs_reciprocal(_denominator(omega, s0, k1, k2).truncate(R)).coeffs
            inv = cache[(k1, k2)]
            out[i1, i2] = -1j * np.convolve(c, inv)[: R + 1]
    return FTSeries(out, R)


def apply_homological(v: FTSeries, omega: RadialSeries, s0: float) -> FTSeries:
    """``(omega(r) d_phi + s0 d_S) v`` (used to check solutions)."""
    return v.diff("phi") * omega + v.diff("S") * s0


def _eps_powers(v: dict, max_power: int, max_order: int) -> dict:
    """``pw[(m, o)]`` = coefficient of eps^o in ``(sum_i eps^i v_i)^m`` for known ``v``."""
    pw = {}
    for o in range(1, max_order + 1):
        if o in v:
            pw[(1, o)] = v[o]
    for m in range(2, max_power + 1):
        for o in range(m, max_order + 1):
            acc = None
            for i in range(1, o - m + 2):
                if i in v and (m - 1, o - i) in pw:
                    term = v[i] * pw[(m - 1, o - i)]
                    acc = term if acc is None else acc + term
            if acc is not None:
                pw[(m, o)] = acc
    return pw


def taylor_part(Lam: dict, v: dict, k: int) -> FTSeries | None:
    """Order-``k`` part of ``sum_{j<k} Lambda_j(r + sum_i eps^i v_i)`` without ``Lambda_k(r)``."""
    pw = _eps_powers(v, k - 1, k - 1)
    acc = None
    for j in range(1, k):
        if j not in Lam:
            continue
        o = k - j
        deriv = Lam[j]
        for m in range(1, o + 1):
            deriv = deriv.deriv()
            if (m, o) not in pw or deriv.is_zero(0.0):
                continue
            term = pw[(m, o)] * FTSeries.lift(deriv) * (1.0 / factorial(m))
            acc = term if acc is None else acc + term
    return acc


def transport_part(spec: SystemSpec, v: dict, k: int) -> FTSeries | None:
    """``sum_{i+j=k} (f_i d_r + r^-1 g_i d_phi + sigma_i d_S) v_j``."""
    acc = None
    for j in range(1, k):
        if j not in v:
            continue
        i = k - j
        vj = v[j]
        pieces = []
        fi = spec.f_terms.get(i)
        if fi is not None and not fi.is_zero(0.0):
            pieces.append(fi * vj.diff("r"))
        gi = spec.g_terms.get(i)
        if gi is not None and not gi.is_zero(0.0):
            pieces.append((gi * vj.diff("phi")).div_r())
        sig = spec.phase.sigma(i)
        if sig:
            pieces.append(vj.diff("S") * sig)
        for piece in pieces:
            acc = piece if acc is None else acc + piece
    return acc


@dataclass
class AveragedSystem:
    spec: SystemSpec
    N: int
    Lambda: dict
    v: dict
    R: dict
    F: dict
    mode_set: set
    r_star: float
    t_star: float
    margin: float

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def p(self) -> int:
        return self.spec.p

    def Lambda_N(self, rho, t):
        t = np.asarray(t, dtype=float)
        out = 0.0
        for k, lam in self.Lambda.items():
            out = out + t ** (-k / self.q) * lam(rho)
        return out

    def vtilde(self, r, phi, t):
        t = np.asarray(t, dtype=float)
        s = self.spec.phase(t)
        out = 0.0
        for k, vk in self.v.items():
            out = out + t ** (-k / self.q) * vk.eval(r, phi, s)
        return out

    def summary(self) -> dict:
        return {
            "N": self.N,
            "Lambda": {str(k): [float(c) for c in lam.coeffs] for k, lam in sorted(self.Lambda.items())},
            "Lambda_trunc": {str(k): lam.trunc_order for k, lam in sorted(self.Lambda.items())},
            "mode_set": sorted(int(z) for z in self.mode_set),
            "r_star": self.r_star,
            "t_star": self.t_star,
            "nonresonance_margin": self.margin,
        }


def _series_bound(s: FTSeries, r: float) -> float:
    """Upper bound of ``|s(r', phi, S)|`` over ``|r'| <= r``."""
    powers = r ** np.arange(s.trunc_order + 1)
    return float(np.sum(np.abs(s.coeffs) * powers))


def choose_t_star(v: dict, q: int, r_star: float, margin: float = 0.1, t_min: float = 1.0) -> float:
    """Smallest ``t`` with ``sum t^(-k/q) sup|v_k| <= margin*r_star`` and the same for ``sup|d_r v_k| <= margin``."""
    b0 = {k: _series_bound(vk, r_star) for k, vk in v.items()}
    b1 = {k: _series_bound(vk.diff("r"), r_star) for k, vk in v.items()}

    def excess(logt):
        t = np.exp(logt)
        e0 = sum(t ** (-k / q) * b for k, b in b0.items()) - margin * r_star
        e1 = sum(t ** (-k / q) * b for k, b in b1.items()) - margin
        return max(e0, e1)

    lo = np.log(t_min)
    if excess(lo) <= 0:
        return float(t_min)
    hi = lo + 1.0
    while excess(hi) > 0:
        hi += 5.0
        if hi > 700:
            raise NoConvergence("no admissible t_star below exp(700)")
    return float(np.exp(brentq(excess, lo, hi, xtol=1e-10)))


def compute_normal_form(spec: SystemSpec, N: int | None = None, k1_bound: int | None = None) -> AveragedSystem:
    """Solve the homological chain for ``k = 1..N`` (default ``N = 2p - 1``)."""
    spec.validate()
    p, q = spec.p, spec.q
    N = 2 * p - 1 if N is None else int(N)
    if not p <= N < 2 * p:
        raise ValueError(f"N must satisfy p <= N < 2p, got N={N}, p={p}")
    nres = check_nonresonance(spec, k1_bound)
    s0 = spec.phase.s0
    Lam, v, Rk, Fk = {}, {}, {}, {}
    Z = set()
    for k in range(1, N + 1):
        fk = spec.f(k)
        parts = []
        tp = taylor_part(Lam, v, k)
        if tp is not None:
            parts.append(tp)
        tr = transport_part(spec, v, k)
        if tr is not None:
            parts.append(-tr)
        if k - q in v:
            parts.append(v[k - q] * ((k - q) / q))
        R = FTSeries.zero(fk.trunc_order)
        for part in parts:
            R = R + part
        Rk[k] = R
        lam = (fk - R).average()
        Lam[k] = lam
        F = FTSeries.lift(lam) - fk + R
        Fk[k] = F
        Z |= F.mode_set
        v[k] = solve_homological(F, spec.omega, s0)
    r_star = nres["r_star"]
    t_star = choose_t_star(v, q, r_star)
    return AveragedSystem(spec, N, Lam, v, Rk, Fk, Z, r_star, t_star, nres["margin"])


def transform_forward(avg: AveragedSystem, r, phi, t, check: bool = True):
    r = np.asarray(r, dtype=float)
    if check and (np.any(np.abs(r) > avg.r_star) or np.any(np.asarray(t) < avg.t_star)):
        raise OutOfDomain(f"need |r| <= r_star={avg.r_star:.4g} and t >= t_star={avg.t_star:.4g}")
    out = r + avg.vtilde(r, phi, t)
    return out if np.ndim(out) else float(out)


def transform_inverse(avg: AveragedSystem, rho, phi, t, tol: float = 1e-12, max_iter: int = 200, check: bool = True):
    """Invert ``rho = r + vtilde(r, phi, t)`` by fixed-point iteration."""
    rho = np.asarray(rho, dtype=float)
    if check and np.any(np.asarray(t) < avg.t_star):
        raise OutOfDomain(f"t must be >= t_star={avg.t_star:.4g}")
    r = rho.copy()
    for _ in range(max_iter):
        r_new = rho - avg.vtilde(r, phi, t)
        if np.all(np.abs(r_new - r) <= tol * np.maximum(1.0, np.abs(rho))):
            r = r_new
            return r if r.ndim else float(r)
        r = r_new
    raise NoConvergence("fixed-point inversion did not converge; t too small or rho too large")


def residual_series(avg: AveragedSystem, t, r, phi):
    """``|d/dt V_N - Lambda_N(V_N, t)|`` along samples of a full-system trajectory.

    The time derivative is assembled by the chain rule from the exact field and
    exact series derivatives (no finite differences).
    """
    spec = avg.spec
    q = spec.q
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = spec.phase(t)
    sdot = spec.phase.rate(t)
    fv, gv = spec.perturbation(r, phi, t)
    phidot = spec.omega(r) + gv / r
    dV = fv.copy() if np.ndim(fv) else np.full_like(t, fv)
    V = r.copy()
    for k, vk in avg.v.items():
        w = t ** (-k / q)
        V = V + w * vk.eval(r, phi, s)
        dV = dV + w * (
            fv * vk.diff("r").eval(r, phi, s)
            + phidot * vk.diff("phi").eval(r, phi, s)
            + sdot * vk.diff("S").eval(r, phi, s)
            - (k / q) / t * vk.eval(r, phi, s)
        )
    return np.abs(dV - avg.Lambda_N(V, t))


def residual_along_trajectory(spec: SystemSpec, avg: AveragedSystem, traj, window=None, bins: int = 40):
    """Fitted decay exponent of the averaging residual along ``traj``.

    The residual oscillates, so the fit uses the maximum of each log-spaced bin.
    Returns an :class:`~oscavg.simulate.ExponentFit`.
    """
    from .simulate import fit_decay_exponent

    t, r, phi = traj.times, traj.r, traj.phi
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, r, phi = t[sel], r[sel], phi[sel]
    if t.size < 10:
        raise InsufficientSamples("need at least 10 samples to fit the residual decay")
    res = residual_series(avg, t, r, phi)
    edges = np.geomspace(t[0], t[-1] * (1 + 1e-12), bins + 1)
    idx = np.digitize(t, edges) - 1
    tb, yb = [], []
    for b in range(bins):
        sel = idx == b
        if np.any(sel) and np.max(res[sel]) > 0:
            j = np.argmax(np.where(sel, res, -np.inf))
            tb.append(t[j])
            yb.append(res[j])
    return fit_decay_exponent(np.array(tb), np.array(yb))
