"""Averaging and long-time asymptotics of asymptotically autonomous oscillators."""
from ._jit import USING_NUMBA
from .asymptotics import AsymptoticSolution, build_rho1, build_rho2, build_rho3, build_rhom, eval_solution, phase_of
from .averaging import (
    AveragedSystem,
    PhaseLaw,
    SystemSpec,
    check_nonresonance,
    compute_normal_form,
    transform_forward,
    transform_inverse,
)
from .classify import RegimeReport, Verdict, analyze, classify, find_leading_index
from .simulate import ExponentFit, IntegratorConfig, Trajectory, escape_probe, fit_decay_exponent, integrate, stability_probe
from .systems import BUILTINS, make_ex0, make_ex1, make_ex2, make_pendulum_chart

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "PhaseLaw",
    "SystemSpec",
    "AveragedSystem",
    "check_nonresonance",
    "compute_normal_form",
    "transform_forward",
    "transform_inverse",
    "RegimeReport",
    "Verdict",
    "analyze",
    "classify",
    "find_leading_index",
    "AsymptoticSolution",
    "build_rho1",
    "build_rho2",
    "build_rho3",
    "build_rhom",
    "eval_solution",
    "phase_of",
    "IntegratorConfig",
    "Trajectory",
    "ExponentFit",
    "integrate",
    "fit_decay_exponent",
    "stability_probe",
    "escape_probe",
    "BUILTINS",
    "make_ex0",
    "make_ex1",
    "make_ex2",
    "make_pendulum_chart",
]
