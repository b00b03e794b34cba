"""Direct simulation of the full system, decay-exponent fits and stability/escape probes."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _integrator
from .averaging import SystemSpec
from .errors import (
    InsufficientSamples,
    IntegrationError,
    NonFiniteState,
    NonPositiveValue,
    PolarSingularity,
    StepSizeUnderflow,
)
from .systems import CartesianField

R_MIN = 1e-6
# local error is held to this fraction of the configured tolerances so that
# rel_tol approximates the global error over ~10^4 oscillation periods
LOCAL_TOL_FRACTION = 1.0 / 32.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_step: float = 0.5
    max_step_rel: float = 0.05
    sample_grid: int = 2000
    max_steps: int = 2_000_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0.0 < v <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if self.max_step <= 0 or self.max_step_rel <= 0:
            raise ValueError("step ceilings must be positive")
        if self.sample_grid < 2:
            raise ValueError("sample_grid must be at least 2")


@dataclass
class Trajectory:
    """Samples of one solution; ``states`` rows are ``(x, y, phi)`` or ``(r, phi)``."""

    times: np.ndarray
    states: np.ndarray
    coordinates: str
    spec_id: str
    phase: object
    restoring: str = "linear"
    n_steps: int = 0
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.coordinates not in ("cartesian", "polar"):
            raise ValueError("coordinates must be 'cartesian' or 'polar'")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def x(self):
        if self.coordinates == "cartesian":
            return self.states[:, 0]
        return self.states[:, 0] * np.cos(self.states[:, 1])

    @property
    def y(self):
        if self.coordinates == "cartesian":
            return self.states[:, 1]
        return -self.states[:, 0] * np.sin(self.states[:, 1])

    @property
    def energy(self):
        x, y = self.x, self.y
        if self.restoring == "linear":
            return 0.5 * (x * x + y * y)
        return 0.5 * y * y + 1.0 - np.cos(x)

    @property
    def r(self):
        """Amplitude ``sqrt(2 H)``; the geometric radius for the linear oscillator."""
        if self.coordinates == "polar":
            return self.states[:, 0]
        return np.sqrt(2.0 * self.energy)

    @property
    def phi(self):
        return self.states[:, 2] if self.coordinates == "cartesian" else self.states[:, 1]

    @property
    def S(self):
        return self.phase(self.times)

    def at(self, t: float) -> int:
        """Index of the sample closest to ``t``."""
        return int(np.argmin(np.abs(self.times - t)))


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError("r_squared must lie in [0, 1]")


def fit_decay_exponent(t, y, window=None) -> ExponentFit:
    """Least-squares slope of ``log y`` against ``log t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < 10:
        raise InsufficientSamples(f"need at least 10 samples, got {t.size}")
    if np.any(y <= 0) or np.any(t <= 0):
        raise NonPositiveValue("decay fits need positive t and y")
    lx, ly = np.log(t), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ExponentFit(float(slope), float(intercept), r2, (float(t[0]), float(t[-1])))


def log_grid(t0: float, t1: float, n: int) -> np.ndarray:
    g = np.geomspace(t0, t1, n)
    g[0], g[-1] = t0, t1
    return g


def to_cartesian(spec: SystemSpec, r: float, phi: float):
    """Physical point with amplitude ``r`` and phase ``phi`` (through the pendulum chart if present)."""
    if spec.chart is not None:
        ch = spec.chart
        return float(ch.X.eval(r, phi, 0.0)), float(ch.Y.eval(r, phi, 0.0))
    return r * np.cos(phi), -r * np.sin(phi)


def _as_field(system) -> CartesianField:
    if isinstance(system, CartesianField):
        return system
    if isinstance(system, SystemSpec) and system.cartesian is not None:
        return system.cartesian
    raise TypeError("Cartesian integration needs a CartesianField or a SystemSpec carrying one")


def _check_status(status, t_reached, t1):
    if status == _integrator.STATUS_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={t_reached:.6g}")
    if status == _integrator.STATUS_NONFINITE:
        raise NonFiniteState(f"non-finite state at t={t_reached:.6g}")
    if status == _integrator.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget exhausted at t={t_reached:.6g} (target {t1:.6g})")


def integrate_cartesian(system, ic, t0: float, t1: float, cfg: IntegratorConfig | None = None, sample_times=None, phi0: float | None = None, spec_id: str = "") -> Trajectory:
    """Integrate ``(x, y)`` from ``ic`` at ``t0`` to ``t1``."""
    cfg = cfg or IntegratorConfig()
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    fld = _as_field(system)
    x0, y0 = float(ic[0]), float(ic[1])
    if phi0 is None:
        phi0 = float(np.arctan2(-y0, x0))
    samples = log_grid(t0, t1, cfg.sample_grid) if sample_times is None else np.unique(np.asarray(sample_times, float))
    if samples[0] < t0 or samples[-1] > t1:
        raise ValueError("sample times must lie in [t0, t1]")
    phase = fld.phase
    s = np.asarray(phase.s, dtype=float)
    restoring = 0 if fld.restoring == "linear" else 1
    out, status, n_steps, t_reached = _integrator.dop853(
        float(t0), float(t1), np.array([x0, y0, phi0]), np.ascontiguousarray(fld.terms), restoring,
        s, int(phase.q), cfg.rel_tol * LOCAL_TOL_FRACTION, cfg.abs_tol * LOCAL_TOL_FRACTION, 0.0, cfg.max_step, cfg.max_step_rel, samples, cfg.max_steps,
    )
    _check_status(status, t_reached, t1)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("integration left unfilled or non-finite samples")
    if not spec_id and isinstance(system, SystemSpec):
        spec_id = system.name
    return Trajectory(samples, out, "cartesian", spec_id, phase, fld.restoring, int(n_steps))


def integrate_polar(spec: SystemSpec, ic, t0: float, t1: float, cfg: IntegratorConfig | None = None, sample_times=None, r_min: float = R_MIN, auto_switch: bool = True) -> Trajectory:
    """Integrate ``(r, phi)`` with the series right-hand side.

    Falls back to Cartesian integration when ``r`` drops below ``r_min`` and
    the spec carries a Cartesian field; otherwise raises PolarSingularity.
    """
    cfg = cfg or IntegratorConfig()
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    samples = log_grid(t0, t1, cfg.sample_grid) if sample_times is None else np.unique(np.asarray(sample_times, float))

    def rhs(t, u):
        r, phi = u
        f, g = spec.perturbation(r, phi, t)
        return [float(f), float(spec.omega(r) + g / r)]

    def low(t, u):
        return u[0] - r_min

    low.terminal = True
    sol = solve_ivp(rhs, (t0, t1), [float(ic[0]), float(ic[1])], method="DOP853", t_eval=samples,
                    rtol=cfg.rel_tol * LOCAL_TOL_FRACTION, atol=cfg.abs_tol * LOCAL_TOL_FRACTION,
                    max_step=cfg.max_step, events=low)
    if sol.status == 1:
        if auto_switch and spec.cartesian is not None:
            x0, y0 = to_cartesian(spec, float(ic[0]), float(ic[1]))
            traj = integrate_cartesian(spec, (x0, y0), t0, t1, cfg, samples, phi0=float(ic[1]))
            traj.notes.append(f"r < {r_min:g} at t={sol.t_events[0][0]:.6g}; switched to Cartesian coordinates")
            return traj
        raise PolarSingularity(f"r dropped below {r_min:g} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise IntegrationError(sol.message)
    states = sol.y.T.copy()
    if not np.all(np.isfinite(states)):
        raise NonFiniteState("non-finite polar state")
    return Trajectory(sol.t.copy(), states, "polar", spec.name, spec.phase, "linear", int(sol.nfev))


def integrate(system, ic, t0: float, t1: float, cfg: IntegratorConfig | None = None, coordinates: str = "cartesian", sample_times=None) -> Trajectory:
    """Integrate a builtin system; ``ic`` is ``(x, y)`` or ``(r, phi)`` according to ``coordinates``."""
    if coordinates == "cartesian":
        return integrate_cartesian(system, ic, t0, t1, cfg, sample_times)
    if coordinates == "polar":
        if not isinstance(system, SystemSpec):
            raise TypeError("polar integration needs a SystemSpec")
        return integrate_polar(system, ic, t0, t1, cfg, sample_times)
    raise ValueError("coordinates must be 'cartesian' or 'polar'")


def make_ensemble(center: float, delta0: float, size: int = 8, seed: int = 0):
    """``size`` initial ``(r, phi)`` pairs with amplitudes evenly spread over ``center +- delta0``."""
    rng = np.random.default_rng(seed)
    offsets = np.linspace(-delta0, delta0, size) if size > 1 else np.zeros(1)
    phis = rng.uniform(0.0, 2 * np.pi, size)
    return [(float(center + o), float(ph)) for o, ph in zip(offsets, phis)]


@dataclass
class ProbeResult:
    tag: str
    values: list
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theorem_tag": self.tag,
            "passed": bool(self.passed),
            "threshold": float(self.threshold),
            "values": [None if v is None else float(v) for v in self.values],
            "details": self.details,
        }


def _reference(sol, t):
    from .asymptotics import eval_solution

    return np.zeros_like(t) if sol is None else eval_solution(sol, t)


def _run_member(spec: SystemSpec, ic, t0, t1, cfg):
    x0, y0 = to_cartesian(spec, ic[0], ic[1])
    return integrate_cartesian(spec, (x0, y0), t0, t1, cfg, phi0=float(ic[1]))


def stability_probe(spec: SystemSpec, sol, ensemble, nu: float, t0: float, t1: float, cfg: IntegratorConfig | None = None, window=None, eps: float = 0.1, tag: str = "stability") -> ProbeResult:
    """``sup_t t^nu |r(t) - rho(t)|`` over ``window`` for each ensemble member (``sol=None`` means ``rho = 0``)."""
    from .asymptotics import phase_of

    lo, hi = window if window is not None else (t0, t1)
    sups, ratios, finals = [], [], []
    for ic in ensemble:
        traj = _run_member(spec, ic, t0, t1, cfg)
        sel = (traj.times >= lo) & (traj.times <= hi)
        t = traj.times[sel]
        dev = t**nu * np.abs(traj.r[sel] - _reference(sol, t))
        sups.append(float(dev.max()))
        finals.append(float(traj.r[-1]))
        if sol is not None:
            ratios.append(float((traj.phi[-1] - traj.phi[0]) / phase_of(sol, t0, t1, spec.omega)))
    details = {"nu": nu, "window": [lo, hi], "t0": t0, "r_final": finals}
    if ratios:
        details["phase_ratio"] = ratios
    return ProbeResult(tag, sups, eps, all(s < eps for s in sups), details)


def escape_probe(spec: SystemSpec, reference, nu: float, eps: float, ensemble, t0: float, t_max: float, cfg: IntegratorConfig | None = None, tag: str = "escape") -> ProbeResult:
    """First sampled time with ``t^nu |r - reference| >= eps`` per member (``None`` if never).

    Members are integrated one decade at a time and stop at the first crossing.
    """
    cfg = cfg or IntegratorConfig()
    n_per = max(10, int(np.ceil(cfg.sample_grid / max(1.0, np.log10(t_max / t0)))))
    times, maxdev = [], []
    for ic in ensemble:
        x, y = to_cartesian(spec, ic[0], ic[1])
        phi = float(ic[1])
        a, hit_t, worst = t0, None, 0.0
        while a < t_max and hit_t is None:
            b = min(10.0 * a, t_max)
            traj = integrate_cartesian(spec, (x, y), a, b, cfg, log_grid(a, b, n_per), phi0=phi)
            t = traj.times
            dev = t**nu * np.abs(traj.r - _reference(reference, t))
            worst = max(worst, float(dev.max()))
            hit = np.nonzero(dev >= eps)[0]
            if hit.size:
                hit_t = float(t[hit[0]])
            x, y, phi = traj.states[-1]
            a = b
        times.append(hit_t)
        maxdev.append(worst)
    details = {"nu": nu, "t0": t0, "t_max": t_max, "max_deviation": maxdev}
    return ProbeResult(tag, times, eps, all(v is not None for v in times), details)


def write_csv(traj: Trajectory, path) -> None:
    """Columns ``t, r, phi, x, y, S`` with 17 significant digits."""
    cols = np.column_stack([traj.times, traj.r, traj.phi, traj.x, traj.y, traj.S])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "r", "phi", "x", "y", "S"])
        for row in cols:
            w.writerow([f"{v:.17g}" for v in row])
