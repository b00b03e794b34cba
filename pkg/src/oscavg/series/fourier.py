"""Fourier-Taylor series in ``(r, phi, S)`` with finitely many harmonics.

A series is ``sum_{k1,k2} c_{k1,k2}(r) exp(i(k1*phi + k2*S))`` where each
``c_{k1,k2}`` is a complex polynomial in ``r`` truncated at ``trunc_order``.
Storage is a dense cube ``coeffs[k1 + A, k2 + B, j]``; Hermitian symmetry
``c_{-k1,-k2} = conj(c_{k1,k2})`` is re-imposed after every operation, so the
represented function is always real.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..errors import DivisionByR, NonRealMean, ZeroConstantTerm
from . import _kernels
from .config import SETTINGS
from .radial import RadialSeries

_TRIM_REL = 1e-15


def _hermitian(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(c[::-1, ::-1, :]))


def _trim(c: np.ndarray) -> np.ndarray:
    """Drop all-zero outer harmonic shells (keeps the centred layout)."""
    mag = np.abs(c)
    scale = mag.max() if mag.size else 0.0
    if scale == 0.0:
        return np.zeros((1, 1, c.shape[2]), dtype=np.complex128)
    keep = mag > _TRIM_REL * scale
    c = np.where(keep, c, 0.0)
    A = (c.shape[0] - 1) // 2
    B = (c.shape[1] - 1) // 2
    rows = np.nonzero(keep.any(axis=(1, 2)))[0]
    cols = np.nonzero(keep.any(axis=(0, 2)))[0]
    a = int(np.max(np.abs(rows - A)))
    b = int(np.max(np.abs(cols - B)))
    return c[A - a : A + a + 1, B - b : B + b + 1, :]


def _clip(c: np.ndarray, a_max: int, b_max: int) -> np.ndarray:
    A = (c.shape[0] - 1) // 2
    B = (c.shape[1] - 1) // 2
    a = min(A, a_max)
    b = min(B, b_max)
    return c[A - a : A + a + 1, B - b : B + b + 1, :]


def _embed(c: np.ndarray, A: int, B: int) -> np.ndarray:
    """Zero-pad a centred cube to half-widths ``(A, B)``."""
    a = (c.shape[0] - 1) // 2
    b = (c.shape[1] - 1) // 2
    out = np.zeros((2 * A + 1, 2 * B + 1, c.shape[2]), dtype=np.complex128)
    out[A - a : A + a + 1, B - b : B + b + 1, :] = c
    return out


@dataclass(frozen=True, eq=False)
class FTSeries:
    coeffs: np.ndarray
    trunc_order: int
    hermitian: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] % 2 == 0 or c.shape[1] % 2 == 0:
            raise ValueError("coefficient cube must have odd Fourier extents")
        R = int(self.trunc_order)
        if c.shape[2] < R + 1:
            c = np.concatenate([c, np.zeros(c.shape[:2] + (R + 1 - c.shape[2],))], axis=2)
        c = c[:, :, : R + 1]
        c = _clip(c, SETTINGS.k1_bound, SETTINGS.k2_bound)
        c = _trim(_hermitian(c) if self.hermitian else c)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "trunc_order", R)

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, trunc_order: int | None = None) -> "FTSeries":
        R = SETTINGS.radial_trunc if trunc_order is None else trunc_order
        return cls(np.zeros((1, 1, R + 1)), R)

    @classmethod
    def lift(cls, radial: RadialSeries | float, trunc_order: int | None = None) -> "FTSeries":
        """Embed an angle-independent radial series (or constant)."""
        if not isinstance(radial, RadialSeries):
            radial = RadialSeries.constant(float(radial), trunc_order)
        return cls(radial.coeffs[None, None, :].astype(np.complex128), radial.trunc_order)

    @classmethod
    def from_modes(cls, modes: dict, trunc_order: int | None = None) -> "FTSeries":
        """Build from Hermitian representatives ``{(k1, k2): coefficients}``.

        Coefficients are complex sequences (power ``j`` of ``r`` at index ``j``)
        or :class:`RadialSeries`. The conjugate partner of each representative is
        filled in automatically; the ``(0, 0)`` mode must be real.
        """
        R = SETTINGS.radial_trunc if trunc_order is None else trunc_order
        if not modes:
            return cls.zero(R)
        A = max(abs(k1) for k1, _ in modes)
        B = max(abs(k2) for _, k2 in modes)
        c = np.zeros((2 * A + 1, 2 * B + 1, R + 1), dtype=np.complex128)
        for (k1, k2), val in modes.items():
            if isinstance(val, RadialSeries):
                val = val.coeffs
            v = np.zeros(R + 1, dtype=np.complex128)
            val = np.asarray(val, dtype=np.complex128).ravel()[: R + 1]
            v[: val.size] = val
            if (k1, k2) == (0, 0):
                c[A, B] += v
            else:
                c[A + k1, B + k2] += v
                c[A - k1, B - k2] += np.conj(v)
        return cls(c, R)

    @classmethod
    def trig(cls, kind: str, k1: int, k2: int, radial=1.0, trunc_order: int | None = None) -> "FTSeries":
        """``radial(r) * cos(k1 phi + k2 S)`` or the ``sin`` analogue."""
        R = SETTINGS.radial_trunc if trunc_order is None else trunc_order
        if not isinstance(radial, RadialSeries):
            radial = RadialSeries.constant(float(radial), R)
        v = radial.coeffs.astype(np.complex128)
        if (k1, k2) == (0, 0):
            return cls.lift(radial) if kind == "cos" else cls.zero(R)
        if kind == "cos":
            rep = 0.5 * v
        elif kind == "sin":
            rep = -0.5j * v
        else:
            raise ValueError("kind must be 'cos' or 'sin'")
        return cls.from_modes({(k1, k2): rep}, min(R, radial.trunc_order))

    # inspection ---------------------------------------------------------
    @property
    def k1_max(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def k2_max(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    def mode(self, k1: int, k2: int) -> np.ndarray:
        A, B = self.k1_max, self.k2_max
        if abs(k1) > A or abs(k2) > B:
            return np.zeros(self.trunc_order + 1, dtype=np.complex128)
        return self.coeffs[A + k1, B + k2].copy()

    @property
    def modes(self) -> dict:
        """Hermitian representatives ``(k1, k2) -> (real RadialSeries, imag RadialSeries)``."""
        out = {}
        A, B = self.k1_max, self.k2_max
        for k1 in range(0, A + 1):
            for k2 in range(-B, B + 1):
                if k1 == 0 and k2 < 0:
                    continue
                v = self.coeffs[A + k1, B + k2]
                if np.any(v != 0):
                    out[(k1, k2)] = (
                        RadialSeries(v.real, self.trunc_order),
                        RadialSeries(v.imag, self.trunc_order),
                    )
        return out

    def mode_keys(self, threshold: float | None = None) -> list:
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        A, B = self.k1_max, self.k2_max
        mask = np.abs(self.coeffs).max(axis=2) > thr
        return [(int(i - A), int(j - B)) for i, j in zip(*np.nonzero(mask))]

    @property
    def mode_set(self) -> set:
        """The set of ``k2`` values carried by nonzero modes."""
        return {k2 for _, k2 in self.mode_keys()}

    def valuation(self, threshold: float | None = None) -> int:
        """Lowest power of ``r`` with a coefficient above threshold."""
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        mask = np.abs(self.coeffs).max(axis=(0, 1)) > thr
        nz = np.nonzero(mask)[0]
        return int(nz[0]) if nz.size else self.trunc_order + 1

    def is_zero(self, threshold: float | None = None) -> bool:
        return self.valuation(threshold) > self.trunc_order

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max())

    def truncate(self, trunc_order: int) -> "FTSeries":
        return FTSeries(self.coeffs, min(trunc_order, self.trunc_order))

    def allclose(self, other: "FTSeries", atol: float = 1e-12) -> bool:
        return (self - other).truncate(min(self.trunc_order, other.trunc_order)).max_abs() <= atol

    def __repr__(self):
        return (
            f"FTSeries(|k1|<={self.k1_max}, |k2|<={self.k2_max}, "
            f"O(r^{self.trunc_order + 1}), {len(self.mode_keys())} modes)"
        )

    # linear structure ------------------------------------------------------
    def _binary(self, other, sign):
        if not isinstance(other, FTSeries):
            if isinstance(other, RadialSeries) or np.isscalar(other):
                other = FTSeries.lift(other if isinstance(other, RadialSeries) else float(other), self.trunc_order)
            else:
                return NotImplemented
        R = min(self.trunc_order, other.trunc_order)
        A = max(self.k1_max, other.k1_max)
        B = max(self.k2_max, other.k2_max)
        a = _embed(self.coeffs[:, :, : R + 1], A, B)
        b = _embed(other.coeffs[:, :, : R + 1], A, B)
        return FTSeries(a + sign * b, R)

    def __add__(self, other):
        return self._binary(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FTSeries(-self.coeffs, self.trunc_order)

    def __mul__(self, other):
        if np.isscalar(other):
            if np.iscomplexobj(other) and np.imag(other) != 0:
                raise TypeError("complex scalars would break real-valuedness")
            return FTSeries(self.coeffs * float(np.real(other)), self.trunc_order)
        if isinstance(other, RadialSeries):
            other = FTSeries.lift(other)
        if not isinstance(other, FTSeries):
            return NotImplemented
        return ft_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int):
        k = int(k)
        out = FTSeries.lift(1.0, self.trunc_order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def map_modes(self, factor) -> "FTSeries":
        """Multiply mode ``(k1, k2)`` by the complex scalar ``factor(k1, k2)``.

        ``factor(-k1, -k2)`` must equal ``conj(factor(k1, k2))`` for the result
        to stay real; the symmetrisation step enforces it otherwise.
        """
        A, B = self.k1_max, self.k2_max
        k1 = np.arange(-A, A + 1)[:, None]
        k2 = np.arange(-B, B + 1)[None, :]
        fac = np.vectorize(factor, otypes=[np.complex128])(k1, k2)
        return FTSeries(self.coeffs * fac[:, :, None], self.trunc_order)

    # calculus ---------------------------------------------------------------
    def diff(self, var: str) -> "FTSeries":
        return ft_diff(self, var)

    def average(self) -> RadialSeries:
        return ft_average(self)

    def div_r(self, threshold: float | None = None) -> "FTSeries":
        thr = SETTINGS.zero_threshold if threshold is None else threshold
        lead = np.abs(self.coeffs[:, :, 0]).max()
        if lead > thr:
            raise DivisionByR(f"cannot divide by r: r^0 coefficient of size {lead:.3e}")
        if self.trunc_order == 0:
            return FTSeries.zero(0)
        return FTSeries(self.coeffs[:, :, 1:], self.trunc_order - 1)

    def mul_r(self, power: int = 1) -> "FTSeries":
        pad = np.zeros(self.coeffs.shape[:2] + (power,), dtype=np.complex128)
        return FTSeries(np.concatenate([pad, self.coeffs], axis=2), self.trunc_order + power)

    def constant_term(self) -> float:
        return float(self.mode(0, 0)[0].real)

    def compose(self, taylor) -> "FTSeries":
        """``sum_j taylor[j] * self**j``; needs ``self`` to vanish at ``r = 0``.

        Terms are summed with their own valuation-aware truncation, so e.g. an
        even function of ``self`` is exact one order beyond ``self`` itself.
        """
        v = self.valuation()
        if v == 0:
            raise ZeroConstantTerm("composition needs a series vanishing at r = 0")
        cap = max(self.trunc_order, SETTINGS.radial_trunc)
        taylor = [float(c) for c in taylor]
        out = FTSeries.lift(RadialSeries.constant(taylor[0] if taylor else 0.0, cap))
        power = None
        for j in range(1, len(taylor)):
            power = self if power is None else power * self
            if j * v > cap:
                break
            if taylor[j]:
                out = out + power * taylor[j]
        return out

    def sin(self) -> "FTSeries":
        n = max(self.trunc_order, SETTINGS.radial_trunc) + 2
        tay = [0.0 if j % 2 == 0 else (-1.0) ** (j // 2) / factorial(j) for j in range(n)]
        return self.compose(tay)

    def cos(self) -> "FTSeries":
        n = max(self.trunc_order, SETTINGS.radial_trunc) + 2
        tay = [0.0 if j % 2 else (-1.0) ** (j // 2) / factorial(j) for j in range(n)]
        return self.compose(tay)

    def power(self, alpha: float) -> "FTSeries":
        """``self**alpha`` for a series whose value at ``r = 0`` is a positive constant."""
        c0 = self.constant_term()
        head = self.coeffs[:, :, 0].copy()
        A, B = self.k1_max, self.k2_max
        head[A, B] = 0.0
        if c0 <= SETTINGS.zero_threshold or np.abs(head).max() > SETTINGS.zero_threshold:
            raise ZeroConstantTerm("binomial power needs a positive, angle-free value at r = 0")
        u = (self - c0) * (1.0 / c0)
        n = max(self.trunc_order, SETTINGS.radial_trunc) + 2
        tay = [1.0]
        for j in range(1, n):
            tay.append(tay[-1] * (alpha - j + 1) / j)
        return u.compose(tay) * (c0 ** alpha)

    def eval(self, r, phi, s):
        return ft_eval(self, r, phi, s)

    __call__ = eval


def ft_mul(a: FTSeries, b: FTSeries) -> FTSeries:
    """Product with valuation-aware truncation.

    A factor vanishing to order ``v`` at ``r = 0`` lets the other factor's
    unknown tail start ``v`` powers later, so the result is exact through
    ``min(Ra + vb, Rb + va)``; storage is capped at the larger of the inputs'
    orders and the global radial setting.
    """
    va, vb = a.valuation(0.0), b.valuation(0.0)
    cap = max(a.trunc_order, b.trunc_order, SETTINGS.radial_trunc)
    R = min(a.trunc_order + vb, b.trunc_order + va, cap)
    return FTSeries(_kernels.convolve(a.coeffs, b.coeffs, R), R)


def ft_diff(a: FTSeries, var: str) -> FTSeries:
    c = a.coeffs
    if var == "r":
        if a.trunc_order == 0:
            return FTSeries.zero(0)
        j = np.arange(1, a.trunc_order + 1)
        return FTSeries(c[:, :, 1:] * j, a.trunc_order - 1)
    if var in ("phi", "φ"):
        k = np.arange(-a.k1_max, a.k1_max + 1)[:, None, None]
    elif var == "S":
        k = np.arange(-a.k2_max, a.k2_max + 1)[None, :, None]
    else:
        raise ValueError(f"unknown variable {var!r}; use 'r', 'phi' or 'S'")
    return FTSeries(c * (1j * k), a.trunc_order)


def ft_average(a: FTSeries, tol: float | None = None) -> RadialSeries:
    tol = SETTINGS.zero_threshold if tol is None else tol
    # read the raw mean before symmetrisation can hide an imaginary part
    m = a.mode(0, 0)
    if np.abs(m.imag).max() > tol:
        raise NonRealMean(f"mean has imaginary part {np.abs(m.imag).max():.3e}")
    return RadialSeries(m.real, a.trunc_order)


def ft_eval(a: FTSeries, r, phi, s):
    """Evaluate at a point or at broadcast arrays of points."""
    r_b, phi_b, s_b = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float), np.asarray(s, float))
    out = _kernels.evaluate(a.coeffs, a.k1_max, a.k2_max, r_b, phi_b, s_b)
    return out.reshape(r_b.shape) if r_b.ndim else float(out[0])


@dataclass
class EpsExpansion:
    """``sum_k t^(-k/q) terms[k]`` with ``1 <= k <= order``."""

    terms: dict
    q: int
    order: int | None = None

    def __post_init__(self):
        if any(int(k) < 1 for k in self.terms):
            raise ValueError("expansion indices start at 1")
        if self.order is not None and any(k > self.order for k in self.terms):
            raise ValueError("expansion index beyond the working order")

    def __getitem__(self, k: int) -> FTSeries:
        term = self.terms.get(k)
        return term if term is not None else FTSeries.zero()

    def keys(self):
        return sorted(self.terms)

    def eval(self, r, phi, s, t):
        total = 0.0
        for k, term in self.terms.items():
            total = total + np.asarray(t, float) ** (-k / self.q) * ft_eval(term, r, phi, s)
        return total
