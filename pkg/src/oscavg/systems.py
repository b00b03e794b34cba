"""Builtin example systems and the pendulum action-angle chart."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .averaging import PhaseLaw, SystemSpec
from .errors import NoConvergence, SpecValidationError
from .series import SETTINGS, FTSeries, RadialSeries, series_settings

SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class CartesianField:
    """``dx/dt = y``, ``dy/dt = -restore(x) + sum_j t^(-e_j) (a_j + b_j sin S) x^px y^py r^pr``.

    ``terms`` rows are ``(e, a, b, px, py, pr)``; ``restoring`` is ``"linear"``
    (``x``) or ``"sin"`` (``sin x``).
    """

    terms: np.ndarray
    restoring: str
    phase: PhaseLaw

    def __post_init__(self):
        if self.restoring not in ("linear", "sin"):
            raise ValueError("restoring must be 'linear' or 'sin'")
        arr = np.asarray(self.terms, dtype=float).reshape(-1, 6)
        object.__setattr__(self, "terms", arr)

    @property
    def singular_at_origin(self) -> bool:
        return bool(np.any(self.terms[:, 5] < 0))

    def perturbation(self, x, y, t):
        x, y, t = (np.asarray(v, dtype=float) for v in (x, y, t))
        s = self.phase(t)
        r = np.hypot(x, y)
        out = 0.0 * (x + y + t)
        for e, a, b, px, py, pr in self.terms:
            out = out + t ** (-e) * (a + b * np.sin(s)) * x ** px * y ** py * r ** pr
        return out

    def __call__(self, t, x, y):
        restore = x if self.restoring == "linear" else np.sin(x)
        return np.asarray(y, float), -restore + self.perturbation(x, y, t)

    def energy(self, x, y):
        """``H`` of the limiting oscillator (``(x^2+y^2)/2`` or the pendulum energy)."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.restoring == "linear":
            return 0.5 * (x * x + y * y)
        return 0.5 * y * y + 1.0 - np.cos(x)


def _sin_S(a0: float, a1: float) -> FTSeries:
    """``a0 + a1 sin S`` as a series."""
    return FTSeries.lift(float(a0)) + FTSeries.trig("sin", 0, 1, a1)


def _add(terms: dict, k: int, series: FTSeries):
    terms[k] = terms[k] + series if k in terms else series


def make_ex1(h: int = 2, p: int = 3, alpha0=1.0, alpha1=1.0, beta0=-2.0, beta1=1.0, gamma0=1.0, gamma1=1.0, s2=1.0, r0=4.0):
    """Harmonic oscillator with a linear ``t^(-h/2)`` and a ``y/r`` ``t^(-p/2)`` perturbation.

    Defaults follow the figure parameters (all auxiliary coefficients equal to one).
    """
    if h < 1 or p < 1:
        raise SpecValidationError("h and p must be positive integers", "(FG)")
    r = FTSeries.lift(RadialSeries.identity())
    cphi = FTSeries.trig("cos", 1, 0)
    sphi = FTSeries.trig("sin", 1, 0)
    alpha = _sin_S(alpha0, alpha1)
    beta = _sin_S(beta0, beta1)
    gamma = _sin_S(gamma0, gamma1)
    lin = alpha * cphi - beta * sphi
    f_terms, g_terms = {}, {}
    if alpha0 or alpha1 or beta0 or beta1:
        _add(f_terms, h, -(lin * r * sphi))
        _add(g_terms, h, -(lin * r * cphi))
    if gamma0 or gamma1:
        _add(f_terms, p, gamma * sphi * sphi)
        _add(g_terms, p, gamma * sphi * cphi)
    phase = PhaseLaw((SQRT2, 0.0, float(s2)), 2)
    cart = CartesianField(
        [
            (h / 2, alpha0, alpha1, 1, 0, 0),
            (h / 2, beta0, beta1, 0, 1, 0),
            (p / 2, gamma0, gamma1, 0, 1, -1),
        ],
        "linear",
        phase,
    )
    params = dict(h=h, p=p, alpha0=alpha0, alpha1=alpha1, beta0=beta0, beta1=beta1, gamma0=gamma0, gamma1=gamma1, s2=s2)
    return SystemSpec(
        omega=RadialSeries.constant(1.0),
        q=2,
        p=p,
        f_terms=f_terms,
        g_terms=g_terms,
        phase=phase,
        r0=r0,
        name="ex1",
        params=params,
        cartesian=cart,
    )


def make_ex0(lam: float = -1.0, gamma0: float = 1.0, gamma1: float = 1.0, p: int = 3, r0: float = 4.0):
    """``dy/dt = -x + lam*y/t + t^(-p/2) gamma(S) y/r`` with ``S = sqrt(2) t``."""
    spec = make_ex1(h=2, p=p, alpha0=0.0, alpha1=0.0, beta0=lam, beta1=0.0, gamma0=gamma0, gamma1=gamma1, s2=0.0, r0=r0)
    spec.name = "ex0"
    spec.params = dict(lam=lam, gamma0=gamma0, gamma1=gamma1, p=p)
    return spec


@dataclass(frozen=True)
class PendulumChart:
    """Periodic orbits of ``x'' = -sin x`` with ``H = r^2/2``, parametrised by phase ``phi``."""

    w: RadialSeries
    X: FTSeries
    Y: FTSeries
    order: int

    def jacobian(self) -> FTSeries:
        """``det d(X, Y)/d(phi, r)``."""
        return self.X.diff("phi") * self.Y.diff("r") - self.Y.diff("phi") * self.X.diff("r")


def _cos_coeffs(s: FTSeries, j: int, kmax: int) -> np.ndarray:
    """Cosine-series coefficients ``e_k`` (``k = 0..kmax``) of the ``r^j`` part of an even-in-phi series."""
    out = np.zeros(kmax + 1)
    if j > s.trunc_order:
        return out
    for k in range(kmax + 1):
        m = s.mode(k, 0)[j].real
        out[k] = m if k == 0 else 2.0 * m
    return out


def make_pendulum_chart(order: int = 8) -> PendulumChart:
    """Lindstedt-Poincare expansion of the pendulum orbits.

    Builds ``X = sum_{j odd} r^j X_j(phi)`` and ``W = w^2`` order by order from
    ``W X_phiphi + sin X = 0``; the ``cos(phi)`` component of each new order is
    fixed by ``H(X, Y) = r^2/2``.
    """
    if order < 4 or order % 2:
        raise ValueError("chart order must be even and >= 4")
    with series_settings(radial_trunc=max(SETTINGS.radial_trunc, order + 2)):
        return _build_chart(order)


def _build_chart(order: int) -> PendulumChart:
    R = order + 1
    X = FTSeries.trig("cos", 1, 0, RadialSeries.identity(R), R)
    W = np.zeros(order + 1)
    W[0] = 1.0
    for j in range(3, R + 1, 2):
        Wser = FTSeries.lift(RadialSeries(W, order))
        E = Wser * X.diff("phi").diff("phi") + X.sin()
        e = _cos_coeffs(E, j, j)
        W[j - 1] = e[1]
        modes = {}
        for k in range(0, j + 1):
            if k == 1:
                continue
            ck = -e[0] if k == 0 else e[k] / (k * k - 1)
            if ck:
                modes[(k, 0)] = np.eye(R + 1)[j] * (ck if k == 0 else ck / 2)
        X = X + FTSeries.from_modes(modes, R) if modes else X
        # amplitude of cos(phi) from the energy normalisation
        Wser = FTSeries.lift(RadialSeries(W, order))
        H = _energy(Wser, X)
        A = -_cos_coeffs(H, j + 1, 0)[0] if j + 1 <= H.trunc_order else 0.0
        if A:
            X = X + FTSeries.trig("cos", 1, 0, RadialSeries(np.eye(R + 1)[j] * A, R), R)
    Wrs = RadialSeries(W, order)
    w = Wrs.sqrt()
    Y = FTSeries.lift(w) * X.diff("phi")
    chart = PendulumChart(w=w, X=X, Y=Y.truncate(R), order=order)
    # solvability sanity check: the residual of the defining ODE must vanish
    res = FTSeries.lift(Wrs) * X.diff("phi").diff("phi") + X.sin()
    if res.truncate(order).max_abs() > 1e-9:
        raise NoConvergence("pendulum chart iteration left a nonzero residual")
    return chart


def _energy(Wser: FTSeries, X: FTSeries) -> FTSeries:
    Xp = X.diff("phi")
    return Wser * Xp * Xp * 0.5 + (-(X.cos()) + 1.0)


def make_ex2(n: int = 1, d: int = 1, p: int = 3, q: int = 3, alpha0=-1.0, alpha1=1.0, beta0=1.0, beta1=1.0, gamma0=1.0, gamma1=1.0, order: int = 8, r0: float = 1.5):
    """Damped oscillatory perturbation of the pendulum, pulled back to ``(r, phi)``.

    ``f_k = r^-1 Y G_k(X, Y, S)`` and ``g_k = -w d_r X G_k(X, Y, S)``.
    """
    if not n + d < p:
        raise SpecValidationError("need n + d < p", "(FG)")
    chart = make_pendulum_chart(order)
    X, Y, w = chart.X, chart.Y, chart.w
    alpha = _sin_S(alpha0, alpha1)
    beta = _sin_S(beta0, beta1)
    gamma = _sin_S(gamma0, gamma1)
    # sqrt(X^2 + Y^2) = r * c(phi, r) with c -> 1 as r -> 0
    c_inv = (X * X + Y * Y).div_r().div_r().power(-0.5)
    G = {
        n: alpha * X * X * Y,
        n + d: beta * Y,
        p: (gamma * Y * c_inv).div_r(),
    }
    f_terms, g_terms = {}, {}
    wdXr = FTSeries.lift(w) * X.diff("r")
    for k, Gk in G.items():
        _add(f_terms, k, (Y * Gk).div_r())
        _add(g_terms, k, -(wdXr * Gk))
    s = [0.0] * (q + 1)
    s[0] = SQRT2
    s[q] = s[q] + 1.0
    phase = PhaseLaw(tuple(s), q)
    cart = CartesianField(
        [
            (n / q, alpha0, alpha1, 2, 1, 0),
            ((n + d) / q, beta0, beta1, 0, 1, 0),
            (p / q, gamma0, gamma1, 0, 1, -1),
        ],
        "sin",
        phase,
    )
    params = dict(n=n, d=d, p=p, q=q, alpha0=alpha0, alpha1=alpha1, beta0=beta0, beta1=beta1, gamma0=gamma0, gamma1=gamma1, order=order)
    spec = SystemSpec(
        omega=w,
        q=q,
        p=p,
        f_terms=f_terms,
        g_terms=g_terms,
        phase=phase,
        r0=r0,
        name="ex2",
        params=params,
        cartesian=cart,
        chart=chart,
    )
    return spec


BUILTINS = {"ex0": make_ex0, "ex1": make_ex1, "ex2": make_ex2}
