"""Numerical checks of classifier verdicts by direct simulation."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .asymptotics import build_rho1, build_rho2, build_rho3, build_rhom, eval_solution
from .averaging import AveragedSystem
from .classify import RegimeReport, Verdict
from .simulate import IntegratorConfig, escape_probe, make_ensemble, stability_probe


@dataclass(frozen=True)
class ProbeSettings:
    """Probe parameters. ``delta0`` bounds the weighted initial offset ``t0^nu |r(t0) - rho(t0)|``."""

    eps: float
    delta0: float
    t0: float
    t1: float
    ensemble_size: int = 8
    seed: int = 0
    M: int = 2


DEFAULT_PROBES = {
    "Th2": ProbeSettings(eps=0.1, delta0=0.02, t0=1e2, t1=1e6),
    "Th3": ProbeSettings(eps=0.1, delta0=0.02, t0=1e3, t1=1e6),
    "Th4": ProbeSettings(eps=0.04, delta0=0.02, t0=1e2, t1=1e6),
    "ThM": ProbeSettings(eps=0.1, delta0=0.02, t0=1e3, t1=1e6),
    "Lem1u": ProbeSettings(eps=5.0, delta0=0.02, t0=1e2, t1=1e6),
    "Lem2u": ProbeSettings(eps=0.5, delta0=0.02, t0=1e2, t1=1e6),
    "ThUnst": ProbeSettings(eps=0.5, delta0=0.05, t0=1.0, t1=1e6),
    "ThDop": ProbeSettings(eps=0.2, delta0=0.02, t0=1e2, t1=1e6),
}


def build_solution(avg: AveragedSystem, report: RegimeReport, verdict: Verdict, M: int):
    kind = verdict.solution
    if kind == "rho1":
        return build_rho1(avg, report.n, report.p, report.q, M)
    if kind == "rho2":
        return build_rho2(avg, verdict.anchor, report.p, report.q, M)
    if kind == "rho3":
        return build_rho3(avg, verdict.anchor, report.n, report.q, M)
    if kind == "rhom":
        nl = report.nonlinear
        return build_rhom(avg, verdict.anchor, report.n, nl["d"], nl["m"], report.p, report.q, M)
    return None


def _small_ensemble(ps: ProbeSettings, nu: float):
    """Ensemble near the origin for the boundedness and escape probes (amplitudes stay positive)."""
    d = ps.delta0 * ps.t0 ** (-nu)
    return make_ensemble(2.0 * d, d, ps.ensemble_size, ps.seed)


def probe_verdict(spec, avg: AveragedSystem, report: RegimeReport, verdict: Verdict, settings: ProbeSettings | None = None, cfg: IntegratorConfig | None = None) -> dict:
    """Run the probe matching ``verdict`` and return a JSON-ready record."""
    tag = verdict.theorem_tag
    ps = settings or DEFAULT_PROBES.get(tag)
    rec = {"theorem_tag": tag, "stability": verdict.stability, "anchor": verdict.anchor}
    if ps is None or verdict.stability == "degenerate":
        rec.update(status="skipped", reason="no probe for this verdict")
        return rec
    if verdict.anchor is not None and verdict.solution is not None and verdict.anchor < 0 and tag != "Lem1u":
        rec.update(status="skipped", reason="negative amplitude anchor is not a physical state")
        return rec
    sol = build_solution(avg, report, verdict, ps.M)
    rec["settings"] = asdict(ps)
    if tag in ("Th2", "Th3", "Th4", "ThM"):
        if tag == "Th2":
            nu = report.nu0
        elif tag == "Th3":
            nu = 2.0 * verdict.predicted_decay_exponent / 3.0
        elif tag == "ThM":
            nu = verdict.predicted_decay_exponent
        else:
            nu = 0.0
        center = float(eval_solution(sol, ps.t0))
        ens = make_ensemble(center, ps.delta0 * ps.t0 ** (-nu), ps.ensemble_size, ps.seed)
        res = stability_probe(spec, sol, ens, nu, ps.t0, ps.t1, cfg, eps=ps.eps, tag=tag)
        rec["measure"] = "sup t^nu |r - rho|"
    elif tag == "ThDop":
        ens = _small_ensemble(ps, 0.0)
        res = stability_probe(spec, None, ens, 0.0, ps.t0, ps.t1, cfg, eps=ps.eps, tag=tag)
        rec["measure"] = "sup |r|"
    elif tag == "Lem1u":
        nu = report.nu0
        ens = _small_ensemble(ps, nu)
        res = escape_probe(spec, sol, nu, ps.eps, ens, ps.t0, ps.t1, cfg, tag=tag)
        rec["measure"] = "first t with t^nu |r - rho_M| >= eps"
    elif tag == "Lem2u":
        center = float(eval_solution(sol, ps.t0))
        ens = make_ensemble(center, ps.delta0, ps.ensemble_size, ps.seed)
        res = escape_probe(spec, sol, 0.0, ps.eps, ens, ps.t0, ps.t1, cfg, tag=tag)
        rec["measure"] = "first t with |r - rho_M| >= eps"
    elif tag == "ThUnst":
        ens = make_ensemble(2.0 * ps.delta0, ps.delta0, ps.ensemble_size, ps.seed)
        res = escape_probe(spec, None, 0.0, ps.eps, ens, ps.t0, ps.t1, cfg, tag=tag)
        rec["measure"] = "first t with |r| >= eps"
    else:
        rec.update(status="skipped", reason="no probe for this verdict")
        return rec
    rec["ensemble"] = [[float(r), float(phi)] for r, phi in ens]
    rec.update(res.to_dict())
    rec["status"] = "pass" if res.passed else "fail"
    if sol is not None:
        rec["solution"] = sol.to_dict()
    return rec


def settings_for(tag: str, overrides: dict | None = None) -> ProbeSettings | None:
    base = DEFAULT_PROBES.get(tag)
    if base is None or not overrides:
        return base
    return replace(base, **overrides)


def verify_report(spec, avg: AveragedSystem, report: RegimeReport, overrides: dict | None = None, cfg: IntegratorConfig | None = None) -> list:
    """Probe every verdict. ``overrides`` maps theorem tags (or ``"*"``) to ProbeSettings fields."""
    overrides = overrides or {}
    out = []
    for v in report.verdicts:
        ov = dict(overrides.get("*", {}))
        ov.update(overrides.get(v.theorem_tag, {}))
        out.append(probe_verdict(spec, avg, report, v, settings_for(v.theorem_tag, ov), cfg))
    return out


def contradictions(records: list) -> list:
    return [r for r in records if r.get("status") == "fail"]
