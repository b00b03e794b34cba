"""Dormand-Prince 8(5,3) stepping for the Cartesian oscillator fields.

State is ``(x, y, phi)``: ``x' = y``, ``y' = -restore(x) + sum_j t^(-e_j)
(a_j + b_j sin S(t)) x^px y^py r^pr`` and the passive angle ``phi = atan2(-y, x)``
unwrapped through ``phi' = (y x' - x y')/(x^2 + y^2)``. Error control uses
``(x, y)`` only. Samples come from the seventh-order dense output.
"""
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from ._jit import USING_NUMBA, njit

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A, dtype=np.float64)
B = np.ascontiguousarray(_dop.B, dtype=np.float64)
C = np.ascontiguousarray(_dop.C, dtype=np.float64)
E3 = np.ascontiguousarray(_dop.E3, dtype=np.float64)
E5 = np.ascontiguousarray(_dop.E5, dtype=np.float64)
D = np.ascontiguousarray(_dop.D, dtype=np.float64)


@njit
def phase_S(t, s, q):
    out = s[0] * t + s[q] * np.log(t)
    for k in range(1, q):
        out += s[k] * t ** (1.0 - k / q)
    return out


@njit
def field(t, x, y, terms, restoring, s, q, out):
    S = phase_S(t, s, q)
    sinS = np.sin(S)
    r2 = x * x + y * y
    r = np.sqrt(r2)
    acc = 0.0
    for j in range(terms.shape[0]):
        e = terms[j, 0]
        amp = terms[j, 1] + terms[j, 2] * sinS
        if amp == 0.0:
            continue
        v = amp * t ** (-e)
        px = int(terms[j, 3])
        py = int(terms[j, 4])
        pr = int(terms[j, 5])
        for _ in range(px):
            v *= x
        for _ in range(py):
            v *= y
        if pr != 0:
            if r == 0.0:
                # y^py r^pr with py >= -pr is bounded; take the limit along y = 0
                v = 0.0
            else:
                v *= r ** pr
        acc += v
    dx = y
    dy = (-x if restoring == 0 else -np.sin(x)) + acc
    out[0] = dx
    out[1] = dy
    out[2] = (y * dx - x * dy) / r2 if r2 > 0.0 else 0.0


@njit
def _stage(y, K, s, h, out):
    for i in range(3):
        acc = 0.0
        for j in range(s):
            acc += A[s, j] * K[j, i]
        out[i] = y[i] + h * acc


@njit
def dop853(t0, t1, y0, terms, restoring, s, q, rtol, atol, h0, max_step, max_step_rel, samples, max_steps):
    """Integrate from ``t0`` to ``t1`` and return states at the sorted times ``samples``.

    Returns ``(out, status, n_steps, t_reached)``; unfilled rows are NaN.
    """
    ns = samples.shape[0]
    out = np.full((ns, 3), np.nan)
    K = np.zeros((16, 3))
    F = np.zeros((7, 3))
    y = y0.copy()
    ytmp = np.zeros(3)
    ynew = np.zeros(3)
    t = t0
    idx = 0
    while idx < ns and samples[idx] <= t0:
        if samples[idx] == t0:
            out[idx, :] = y
        idx += 1
    field(t, y[0], y[1], terms, restoring, s, q, K[0])
    h = h0
    if h <= 0.0:
        h = 1e-3 * max(1.0, t0)
    n_steps = 0
    status = STATUS_OK
    while t < t1:
        hmax = min(max_step, max_step_rel * t)
        if h > hmax:
            h = hmax
        if t + h > t1:
            h = t1 - t
        if h < 1e-14 * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
        for st in range(1, N_STAGES):
            _stage(y, K, st, h, ytmp)
            field(t + C[st] * h, ytmp[0], ytmp[1], terms, restoring, s, q, K[st])
        for i in range(3):
            acc = 0.0
            for j in range(N_STAGES):
                acc += B[j] * K[j, i]
            ynew[i] = y[i] + h * acc
        field(t + h, ynew[0], ynew[1], terms, restoring, s, q, K[N_STAGES])
        e5 = 0.0
        e3 = 0.0
        for i in range(2):
            a5 = 0.0
            a3 = 0.0
            for j in range(N_STAGES + 1):
                a5 += E5[j] * K[j, i]
                a3 += E3[j] * K[j, i]
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e5 += (a5 / sc) ** 2
            e3 += (a3 / sc) ** 2
        if e5 == 0.0 and e3 == 0.0:
            err = 0.0
        else:
            err = h * e5 / np.sqrt((e5 + 0.01 * e3) * 2.0)
        if not np.isfinite(err) or not (np.isfinite(ynew[0]) and np.isfinite(ynew[1]) and np.isfinite(ynew[2])):
            if h < 1e-12 * max(1.0, abs(t)):
                status = STATUS_NONFINITE
                break
            h *= 0.25
            continue
        if err <= 1.0:
            if idx < ns and samples[idx] <= t + h:
                for st in range(N_STAGES + 1, 16):
                    _stage(y, K, st, h, ytmp)
                    field(t + C[st] * h, ytmp[0], ytmp[1], terms, restoring, s, q, K[st])
                for i in range(3):
                    dy = ynew[i] - y[i]
                    F[0, i] = dy
                    F[1, i] = h * K[0, i] - dy
                    F[2, i] = 2.0 * dy - h * (K[N_STAGES, i] + K[0, i])
                    for m in range(4):
                        acc = 0.0
                        for j in range(16):
                            acc += D[m, j] * K[j, i]
                        F[3 + m, i] = h * acc
            while idx < ns and samples[idx] <= t + h:
                th = (samples[idx] - t) / h
                for i in range(3):
                    v = 0.0
                    for m in range(7):
                        v += F[6 - m, i]
                        v *= th if m % 2 == 0 else 1.0 - th
                    out[idx, i] = y[i] + v
                idx += 1
            t = t + h
            for i in range(3):
                y[i] = ynew[i]
                K[0, i] = K[N_STAGES, i]
            n_steps += 1
            if n_steps >= max_steps:
                status = STATUS_MAX_STEPS
                break
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.125))
            h *= fac
        else:
            h *= max(0.2, 0.9 * err ** -0.125)
    return out, status, n_steps, t


def warm_up():
    """Trigger compilation (no-op on the fallback path)."""
    if not USING_NUMBA:
        return
    terms = np.array([[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]])
    s = np.array([1.0, 0.0])
    dop853(1.0, 1.1, np.array([1.0, 0.0, 0.0]), terms, 0, s, 1, 1e-6, 1e-9, 0.0, 1.0, 1.0, np.array([1.1]), 100)
