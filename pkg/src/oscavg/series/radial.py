"""Truncated power series in the amplitude variable r."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..errors import DivisionByR, ZeroConstantTerm
from .config import SETTINGS


def _as_array(coeffs) -> np.ndarray:
    arr = np.array(coeffs, dtype=float).ravel()
    if arr.size == 0:
        arr = np.zeros(1)
    return arr


@dataclass(frozen=True, eq=False)
class RadialSeries:
    """``sum_j coeffs[j] r^j`` known exactly up to and including ``r**trunc_order``."""

    coeffs: np.ndarray
    trunc_order: int

    def __post_init__(self):
        c = _as_array(self.coeffs)
        R = int(self.trunc_order)
        if R < 0:
            raise ValueError("trunc_order must be >= 0")
        if c.size < R + 1:
            c = np.concatenate([c, np.zeros(R + 1 - c.size)])
        c = c[: R + 1].copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "trunc_order", R)

    # construction -------------------------------------------------------
    @classmethod
    def from_coeffs(cls, coeffs, trunc_order: int | None = None) -> "RadialSeries":
        c = _as_array(coeffs)
        if trunc_order is None:
            trunc_order = SETTINGS.radial_trunc
        return cls(c, trunc_order)

    @classmethod
    def constant(cls, value: float, trunc_order: int | None = None) -> "RadialSeries":
        return cls.from_coeffs([value], trunc_order)

    @classmethod
    def zero(cls, trunc_order: int | None = None) -> "RadialSeries":
        return cls.from_coeffs([0.0], trunc_order)

    @classmethod
    def identity(cls, trunc_order: int | None = None) -> "RadialSeries":
        """The series ``r`` itself."""
        return cls.from_coeffs([0.0, 1.0], trunc_order)

    # inspection ---------------------------------------------------------
    def __getitem__(self, j: int) -> float:
        return float(self.coeffs[j]) if 0 <= j <= self.trunc_order else 0.0

    def __len__(self):
        return self.trunc_order + 1

    def __repr__(self):
        terms = [f"{c:+.6g}*r^{j}" for j, c in enumerate(self.coeffs) if c != 0.0]
        return f"RadialSeries({' '.join(terms) or '0'}; O(r^{self.trunc_order + 1}))"

    def valuation(self, threshold: float | None = None) -> int:
        """Index of the first coefficient above threshold (``trunc_order + 1`` if none)."""
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        nz = np.nonzero(np.abs(self.coeffs) > thr)[0]
        return int(nz[0]) if nz.size else self.trunc_order + 1

    def is_zero(self, threshold: float | None = None) -> bool:
        return self.valuation(threshold) > self.trunc_order

    def truncate(self, trunc_order: int) -> "RadialSeries":
        return RadialSeries(self.coeffs, min(trunc_order, self.trunc_order))

    def allclose(self, other, atol=1e-12) -> bool:
        other = _coerce(other, self.trunc_order)
        R = min(self.trunc_order, other.trunc_order)
        return bool(np.allclose(self.coeffs[: R + 1], other.coeffs[: R + 1], rtol=0, atol=atol))

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other, self.trunc_order)
        R = min(self.trunc_order, other.trunc_order)
        return RadialSeries(self.coeffs[: R + 1] + other.coeffs[: R + 1], R)

    __radd__ = __add__

    def __neg__(self):
        return RadialSeries(-self.coeffs, self.trunc_order)

    def __sub__(self, other):
        return self + (-_coerce(other, self.trunc_order))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return RadialSeries(self.coeffs * float(other), self.trunc_order)
        if not isinstance(other, RadialSeries):
            return NotImplemented
        return rs_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return RadialSeries(self.coeffs / float(other), self.trunc_order)
        return rs_mul(self, rs_reciprocal(other))

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            return self.power(k)
        out = RadialSeries.constant(1.0, self.trunc_order)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus -------------------------------------------------------------
    def deriv(self, times: int = 1) -> "RadialSeries":
        c = self.coeffs
        R = self.trunc_order
        for _ in range(times):
            if R == 0:
                return RadialSeries([0.0], 0)
            c = c[1:] * np.arange(1, c.size)
            R -= 1
        return RadialSeries(c, R)

    def div_r(self, threshold: float | None = None) -> "RadialSeries":
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        if abs(self.coeffs[0]) > thr:
            raise DivisionByR(f"cannot divide by r: constant term {self.coeffs[0]:.3e}")
        if self.trunc_order == 0:
            return RadialSeries([0.0], 0)
        return RadialSeries(self.coeffs[1:], self.trunc_order - 1)

    def mul_r(self, power: int = 1) -> "RadialSeries":
        return RadialSeries(np.concatenate([np.zeros(power), self.coeffs]), self.trunc_order + power)

    def shift(self, x0: float) -> "RadialSeries":
        """Re-expand about ``x0``: coefficients of ``u -> self(x0 + u)``.

        The stored polynomial is re-centred exactly; the truncation order is kept.
        """
        R = self.trunc_order
        out = np.zeros(R + 1)
        c = self.coeffs
        for m in range(R + 1):
            # m-th Taylor coefficient at x0
            j = np.arange(m, R + 1)
            binom = np.array([_binom(jj, m) for jj in j])
            out[m] = np.sum(binom * c[m:] * x0 ** (j - m))
        return RadialSeries(out, R)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c in self.coeffs[::-1]:
            out = out * r + c
        return out if out.ndim else float(out)

    eval = __call__

    def power(self, alpha: float) -> "RadialSeries":
        """``self**alpha`` by the binomial series; needs a positive constant term."""
        a0 = self.coeffs[0]
        if a0 <= SETTINGS.zero_threshold:
            raise ZeroConstantTerm("power series base must have a positive constant term")
        u = (self - a0) / a0
        term = RadialSeries.constant(1.0, self.trunc_order)
        out = term
        coef = 1.0
        for j in range(1, self.trunc_order + 1):
            coef *= (alpha - j + 1) / j
            term = term * u
            out = out + term * coef
        return out * (a0 ** alpha)

    def sqrt(self) -> "RadialSeries":
        return self.power(0.5)


def _binom(n: int, k: int) -> float:
    return factorial(n) / (factorial(k) * factorial(n - k))


def _coerce(x, trunc_order: int) -> RadialSeries:
    if isinstance(x, RadialSeries):
        return x
    if np.isscalar(x):
        return RadialSeries.constant(float(x), trunc_order)
    raise TypeError(f"cannot combine RadialSeries with {type(x).__name__}")


def rs_mul(a: RadialSeries, b: RadialSeries) -> RadialSeries:
    """Cauchy product truncated to ``min`` of the two truncation orders."""
    R = min(a.trunc_order, b.trunc_order)
    return RadialSeries(np.convolve(a.coeffs[: R + 1], b.coeffs[: R + 1])[: R + 1], R)


def rs_reciprocal(a: RadialSeries, threshold: float | None = None) -> RadialSeries:
    thr = SETTINGS.zero_threshold if threshold is None else threshold
    c = a.coeffs
    if abs(c[0]) <= thr:
        raise ZeroConstantTerm(f"reciprocal needs a nonzero constant term, got {c[0]:.3e}")
    R = a.trunc_order
    out = np.zeros(R + 1)
    out[0] = 1.0 / c[0]
    for j in range(1, R + 1):
        out[j] = -np.dot(c[1 : j + 1], out[j - 1 :: -1][:j]) / c[0]
    return RadialSeries(out, R)
