import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ft(rng, a_max=3, b_max=2, R=8, zero_mean=False):
    """Random real-valued Fourier-Taylor series with small harmonic support."""
    from oscavg.series import FTSeries

    modes = {}
    for k1 in range(0, a_max + 1):
        for k2 in range(-b_max, b_max + 1):
            if k1 == 0 and k2 < 0:
                continue
            if (k1, k2) == (0, 0):
                if zero_mean:
                    continue
                modes[(0, 0)] = rng.normal(size=R + 1)
            else:
                modes[(k1, k2)] = rng.normal(size=R + 1) + 1j * rng.normal(size=R + 1)
    return FTSeries.from_modes(modes, R)


def brute_eval(series, r, phi, s):
    """Independent term-by-term summation of a Fourier-Taylor series."""
    A, B = series.k1_max, series.k2_max
    total = 0.0 + 0.0j
    for i in range(2 * A + 1):
        for j in range(2 * B + 1):
            k1, k2 = i - A, j - B
            for p, c in enumerate(series.coeffs[i, j]):
                total += c * r**p * np.exp(1j * (k1 * phi + k2 * s))
    return total.real


def random_spec(rng, q=2, p=3, r0=1.0, s=None):
    """A small synthetic system obeying the structural assumptions (first p-1 orders vanish at r=0)."""
    from oscavg.averaging import PhaseLaw, SystemSpec
    from oscavg.series import FTSeries, RadialSeries

    r = FTSeries.lift(RadialSeries.identity())
    f_terms, g_terms = {}, {}
    for k in range(1, p + 1):
        f = random_ft(rng, a_max=2, b_max=1) * 0.3
        g = random_ft(rng, a_max=2, b_max=1) * 0.3
        if k < p:
            f, g = f * r, g * r
        else:
            f = f + 1.0
        f_terms[k], g_terms[k] = f, g * r
    if s is None:
        s = [float(np.sqrt(2.0))] + [0.5] * q
    omega = RadialSeries.from_coeffs([1.0, 0.0, 0.1])
    return SystemSpec(omega=omega, q=q, p=p, f_terms=f_terms, g_terms=g_terms, phase=PhaseLaw(tuple(s), q), r0=r0, name="random")


# acceptance lines are collected here and repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
