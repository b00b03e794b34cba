"""Hot loops of the series algebra: truncated 3-D convolution and pointwise evaluation.

Axis layout of every coefficient cube is ``(k1, k2, power of r)`` with the
Fourier axes centred (index ``A`` holds ``k1 = 0``).
"""
import numpy as np

from .._jit import USING_NUMBA, njit


@njit
def _convolve_numba(a, b, rmax):
    na1, na2, ra = a.shape
    nb1, nb2, rb = b.shape
    out = np.zeros((na1 + nb1 - 1, na2 + nb2 - 1, rmax + 1), dtype=np.complex128)
    for i1 in range(na1):
        for i2 in range(na2):
            for p in range(min(ra, rmax + 1)):
                av = a[i1, i2, p]
                if av == 0:
                    continue
                qmax = min(rb, rmax + 1 - p)
                for j1 in range(nb1):
                    for j2 in range(nb2):
                        for q in range(qmax):
                            bv = b[j1, j2, q]
                            if bv != 0:
                                out[i1 + j1, i2 + j2, p + q] += av * bv
    return out


def _convolve_numpy(a, b, rmax):
    na1, na2, ra = a.shape
    nb1, nb2, rb = b.shape
    shape = (na1 + nb1 - 1, na2 + nb2 - 1)
    fa = np.fft.fft2(a, s=shape, axes=(0, 1))
    fb = np.fft.fft2(b, s=shape, axes=(0, 1))
    acc = np.zeros(shape + (rmax + 1,), dtype=np.complex128)
    for p in range(min(ra, rmax + 1)):
        m = min(rb, rmax + 1 - p)
        if m > 0:
            acc[..., p:p + m] += fa[..., p, None] * fb[..., :m]
    return np.fft.ifft2(acc, axes=(0, 1))


@njit
def _eval_numba(c, a_off, b_off, r, phi, s):
    n1, n2, nr = c.shape
    out = np.zeros(r.shape[0])
    for n in range(r.shape[0]):
        total = 0.0
        rn = r[n]
        for i1 in range(n1):
            for i2 in range(n2):
                vr = 0.0
                vi = 0.0
                for p in range(nr - 1, -1, -1):
                    vr = vr * rn + c[i1, i2, p].real
                    vi = vi * rn + c[i1, i2, p].imag
                if vr == 0.0 and vi == 0.0:
                    continue
                ang = (i1 - a_off) * phi[n] + (i2 - b_off) * s[n]
                total += vr * np.cos(ang) - vi * np.sin(ang)
        out[n] = total
    return out


def _eval_numpy(c, a_off, b_off, r, phi, s, chunk=4096):
    n1, n2, nr = c.shape
    k1 = np.arange(n1) - a_off
    k2 = np.arange(n2) - b_off
    out = np.empty(r.shape[0])
    for lo in range(0, r.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        powers = r[sl, None] ** np.arange(nr)
        radial = np.einsum("abp,np->nab", c, powers)
        ang = k1[None, :, None] * phi[sl, None, None] + k2[None, None, :] * s[sl, None, None]
        out[sl] = np.real(radial * np.exp(1j * ang)).sum(axis=(1, 2))
    return out


def convolve(a, b, rmax):
    """Truncated product of two coefficient cubes, keeping powers ``<= rmax``."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if USING_NUMBA:
        return _convolve_numba(a, b, int(rmax))
    return _convolve_numpy(a, b, int(rmax))


def evaluate(c, a_off, b_off, r, phi, s):
    """Real value of the series at each point ``(r[n], phi[n], s[n])``."""
    c = np.ascontiguousarray(c, dtype=np.complex128)
    r, phi, s = (np.ascontiguousarray(np.asarray(v, dtype=float).ravel()) for v in (r, phi, s))
    if USING_NUMBA:
        return _eval_numba(c, int(a_off), int(b_off), r, phi, s)
    return _eval_numpy(c, int(a_off), int(b_off), r, phi, s)
