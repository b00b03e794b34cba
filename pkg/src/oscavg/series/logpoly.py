"""Polynomials in ``tau = log t`` and the linear first-order solve used by the asymptotic recursions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from ..errors import DegenerateCoefficient, LogDegreeOverflow
from .config import SETTINGS

MAX_LOG_DEGREE = 16


@dataclass(frozen=True, eq=False)
class LogPolynomial:
    """``sum_j coeffs[j] tau^j``; trailing zeros are stripped so ``degree`` is exact."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.array(self.coeffs, dtype=float))
        if c.size == 0:
            c = np.zeros(1)
        c = np.trim_zeros(c, "b")
        if c.size == 0:
            c = np.zeros(1)
        if c.size - 1 > MAX_LOG_DEGREE:
            raise LogDegreeOverflow(f"log-polynomial degree {c.size - 1} exceeds cap {MAX_LOG_DEGREE}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, value: float) -> "LogPolynomial":
        return cls([value])

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self, threshold: float | None = None) -> bool:
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        return bool(np.all(np.abs(self.coeffs) <= thr))

    def __getitem__(self, j):
        return float(self.coeffs[j]) if 0 <= j < self.coeffs.size else 0.0

    def __call__(self, tau):
        return P.polyval(np.asarray(tau, dtype=float), self.coeffs)

    def __add__(self, other):
        other = _coerce(other)
        return LogPolynomial(P.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return LogPolynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return LogPolynomial(self.coeffs * float(other))
        other = _coerce(other)
        return LogPolynomial(P.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other: float):
        return LogPolynomial(self.coeffs / float(other))

    def deriv(self) -> "LogPolynomial":
        return LogPolynomial(P.polyder(self.coeffs)) if self.degree else LogPolynomial([0.0])

    def antideriv(self, tau0: float = 0.0) -> "LogPolynomial":
        """Antiderivative vanishing at ``tau0``."""
        return LogPolynomial(P.polyint(self.coeffs, lbnd=tau0))

    def allclose(self, other, atol=1e-12) -> bool:
        d = self - _coerce(other)
        return bool(np.all(np.abs(d.coeffs) <= atol))

    def __repr__(self):
        return "LogPolynomial(" + " ".join(f"{c:+.6g}*tau^{j}" for j, c in enumerate(self.coeffs)) + ")"

    def to_list(self) -> list:
        return [float(c) for c in self.coeffs]


def _coerce(x) -> LogPolynomial:
    if isinstance(x, LogPolynomial):
        return x
    return LogPolynomial.constant(float(x))


CASES = ("algebraic", "marginal", "integral")


def lp_solve_linear_ode(mu: float, b: LogPolynomial, case: str | None = None, tau0: float = 0.0) -> LogPolynomial:
    """Polynomial solution of ``xi' - mu * xi = b``.

    ``algebraic`` and ``integral`` both return the unique polynomial particular
    solution ``-sum_j b^(j) / mu^(j+1)`` (they differ only in how the caller
    arrived at ``mu``); ``marginal`` (``mu = 0``) returns the antiderivative of
    ``b`` vanishing at ``tau0``. With ``case=None`` the branch is chosen from
    ``mu`` against the zero threshold.
    """
    b = _coerce(b)
    thr = SETTINGS.zero_threshold
    if case is None:
        case = "marginal" if abs(mu) <= thr else "algebraic"
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    if case == "marginal":
        if abs(mu) > thr:
            raise ValueError(f"marginal case needs mu = 0, got {mu!r}")
        return b.antideriv(tau0)
    if abs(mu) <= thr:
        raise DegenerateCoefficient(f"{case} case with vanishing coefficient mu={mu!r}")
    out = np.zeros(b.degree + 1)
    d = b.coeffs
    scale = 1.0 / mu
    for _ in range(b.degree + 1):
        out[: d.size] -= d * scale
        d = P.polyder(d) if d.size > 1 else np.zeros(0)
        if d.size == 0:
            break
        scale /= mu
    return LogPolynomial(out)
