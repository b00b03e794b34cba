"""Command-line front end: ``oscavg analyze|simulate|verify|examples``.

Config documents are JSON::

    {
      "system": {"builtin": "ex1", "params": {"beta0": -2.0}}
             or {"inline": {"q": 2, "p": 3, "omega": [1.0], "phase": [1.414, 0.0, 1.0],
                            "r0": 1.0, "terms": [{"k": 2, "f_modes": [{"k1": 0, "k2": 0,
                            "re_coeffs": [...], "im_coeffs": [...]}], "g_modes": [...]}]}},
      "orders": {"N": null, "M": 2, "radial_trunc": 8, "k1_bound": 16},
      "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-12, "max_step": 0.5, "sample_grid": 2000},
      "analyze": {"rho0": null},
      "simulate": {"t0": 1.0, "t1": 1e4, "r_init": 1.0, "delta0": 0.0, "ensemble_size": 1,
                   "seed": 0, "fit_window": null, "escape_radius": null},
      "probes": [{"theorem_tag": "Th2", "eps": 0.1, "delta0": 0.02, "t0": 100, "t1": 1e6,
                  "ensemble_size": 8, "seed": 0}],
      "output_dir": "out"
    }

``--set key=value`` overrides a dotted config path (``orders.M=3``); a bare key
sets a top-level entry when it names one (``probes=[...]``) and a builtin
parameter otherwise (``beta0=-1.5``). A probe with ``theorem_tag`` ``"*"``
applies to every verdict. Mode ``re_coeffs``/``im_coeffs``
list powers of ``r`` of the ``exp(i(k1 phi + k2 S))`` coefficient; conjugate
modes are implied.

Exit codes: 0 ok, 2 resonance, 3 invalid spec or config, 4 integration
failure, 5 a probe contradicts its verdict.
"""
from __future__ import annotations

import argparse
import copy
import inspect
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .averaging import PhaseLaw, SystemSpec, compute_normal_form
from .classify import analyze
from .errors import AssumptionViolated, IntegrationError, OscAvgError, ResonanceDetected, SpecValidationError
from .series import FTSeries, RadialSeries, series_settings
from .simulate import IntegratorConfig, fit_decay_exponent, integrate, integrate_cartesian, make_ensemble, to_cartesian, write_csv
from .systems import BUILTINS
from .verify import build_solution, contradictions, verify_report

EXIT_OK, EXIT_RESONANCE, EXIT_INVALID, EXIT_INTEGRATION, EXIT_CONTRADICTION = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    system: dict
    command: str = "analyze"
    orders: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    analyze: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    probes: list = field(default_factory=list)
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d: dict, command: str) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise SpecValidationError(f"unknown config keys {sorted(extra)}", "config")
        if "system" not in d:
            raise SpecValidationError("config needs a 'system' entry", "config")
        d = dict(d)
        d["command"] = command
        cfg = cls(**d)
        for p in cfg.probes:
            if "theorem_tag" not in p:
                raise SpecValidationError("every probe needs a theorem_tag", "config")
        return cfg

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator)

    def probe_overrides(self) -> dict:
        out = {}
        for p in self.probes:
            p = dict(p)
            tag = p.pop("theorem_tag")
            out[tag] = p
        return out


# JSON output with 17 significant digits ------------------------------------


def _fmt(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = f"{x:.17g}"
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(v, indent, level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_fmt(v, indent, level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _fmt(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _fmt(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _fmt(obj, indent, 0) + "\n"


# config plumbing -------------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, sets: list) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in sets or []:
        if "=" not in item:
            raise SpecValidationError(f"--set expects key=value, got {item!r}", "config")
        key, val = item.split("=", 1)
        val = _parse_value(val)
        if "." in key:
            path = key.split(".")
        elif key in RunConfig.__dataclass_fields__:
            path = [key]
        else:
            path = ["system", "params", key]
        node = cfg
        for part in path[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        node[path[-1]] = val
    return cfg


def _modes(entries) -> FTSeries:
    modes = {}
    for m in entries:
        re = np.asarray(m.get("re_coeffs", []), dtype=float)
        im = np.asarray(m.get("im_coeffs", []), dtype=float)
        n = max(re.size, im.size, 1)
        c = np.zeros(n, dtype=np.complex128)
        c[: re.size] += re
        c[: im.size] += 1j * im
        key = (int(m["k1"]), int(m["k2"]))
        modes[key] = modes[key] + c if key in modes else c
    return FTSeries.from_modes(modes)


def build_inline(d: dict) -> SystemSpec:
    try:
        q, p = int(d["q"]), int(d["p"])
        phase = PhaseLaw(tuple(d["phase"]), q)
        omega = RadialSeries.from_coeffs(d.get("omega", [1.0]))
        f_terms, g_terms = {}, {}
        for term in d.get("terms", []):
            k = int(term["k"])
            if term.get("f_modes"):
                f_terms[k] = _modes(term["f_modes"])
            if term.get("g_modes"):
                g_terms[k] = _modes(term["g_modes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError(f"malformed inline system: {exc}", "(FG)") from exc
    return SystemSpec(omega=omega, q=q, p=p, f_terms=f_terms, g_terms=g_terms, phase=phase,
                      r0=float(d.get("r0", 1.0)), name=d.get("name", "inline"), params={})


def build_system(sys_cfg: dict) -> SystemSpec:
    if "builtin" in sys_cfg:
        name = sys_cfg["builtin"]
        if name not in BUILTINS:
            raise SpecValidationError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}", "config")
        params = sys_cfg.get("params", {}) or {}
        try:
            return BUILTINS[name](**params)
        except TypeError as exc:
            raise SpecValidationError(f"bad parameters for {name}: {exc}", "config") from exc
    if "inline" in sys_cfg:
        return build_inline(sys_cfg["inline"])
    raise SpecValidationError("system needs 'builtin' or 'inline'", "config")


def _series_overrides(orders: dict) -> dict:
    return {k: orders[k] for k in ("radial_trunc", "k1_bound") if orders.get(k) is not None}


def run_analysis(cfg: RunConfig):
    with series_settings(**_series_overrides(cfg.orders)):
        spec = build_system(cfg.system)
        spec.validate()
        avg = compute_normal_form(spec, N=cfg.orders.get("N"), k1_bound=cfg.orders.get("k1_bound"))
        report = analyze(avg, rho0_q3=cfg.analyze.get("rho0"))
        sols = []
        M = int(cfg.orders.get("M", 2))
        for v in report.verdicts:
            if v.solution is None:
                continue
            try:
                sols.append({"theorem_tag": v.theorem_tag, **build_solution(avg, report, v, M).to_dict()})
            except OscAvgError as exc:
                sols.append({"theorem_tag": v.theorem_tag, "error": str(exc)})
    return spec, avg, report, sols


def cmd_analyze(cfg: RunConfig) -> dict:
    spec, avg, report, sols = run_analysis(cfg)
    doc = {"system": {"name": spec.name, "params": spec.params, "q": spec.q, "p": spec.p},
           "averaged": avg.summary(), "regime": report.to_dict(), "asymptotics": sols}
    _write(cfg, "report.json", dumps(doc))
    return doc


def cmd_simulate(cfg: RunConfig) -> dict:
    sim = dict(cfg.simulate)
    with series_settings(**_series_overrides(cfg.orders)):
        spec = build_system(cfg.system)
    t0, t1 = float(sim.get("t0", 1.0)), float(sim.get("t1", 1e4))
    r_init = float(sim.get("r_init", 1.0))
    ens = make_ensemble(r_init, float(sim.get("delta0", 0.0)), int(sim.get("ensemble_size", 1)), int(sim.get("seed", 0)))
    escape_radius = sim.get("escape_radius")
    escape_radius = 2.0 * max(r for r, _ in ens) if escape_radius is None else float(escape_radius)
    window = sim.get("fit_window") or [min(10.0 * t0, t1), t1]
    icfg = cfg.integrator_config()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    members = []
    for i, (r0, phi0) in enumerate(ens):
        try:
            if spec.cartesian is not None:
                traj = integrate_cartesian(spec, to_cartesian(spec, r0, phi0), t0, t1, icfg, phi0=phi0)
            else:
                traj = integrate(spec, (r0, phi0), t0, t1, icfg, coordinates="polar")
        except IntegrationError as exc:
            raise IntegrationError(f"ensemble member {i}: {exc}") from exc
        write_csv(traj, out / f"traj_{i}.csv")
        rec = {"index": i, "r_init": r0, "phi_init": phi0, "r_final": float(traj.r[-1]), "r_max": float(traj.r.max()),
               "escaped": bool(traj.r.max() >= escape_radius), "steps": traj.n_steps}
        for name, series in (("r", traj.r), ("H", traj.energy)):
            try:
                rec[f"fit_{name}"] = asdict(fit_decay_exponent(traj.times, series, window))
            except OscAvgError as exc:
                rec[f"fit_{name}"] = {"error": str(exc)}
        members.append(rec)
    doc = {"system": {"name": spec.name, "params": spec.params}, "t0": t0, "t1": t1, "escape_radius": escape_radius,
           "fit_window": list(window), "integrator": asdict(icfg), "members": members}
    _write(cfg, "simulate.json", dumps(doc))
    return doc


def cmd_verify(cfg: RunConfig) -> dict:
    spec, avg, report, sols = run_analysis(cfg)
    records = verify_report(spec, avg, report, cfg.probe_overrides(), cfg.integrator_config())
    doc = {"regime": report.to_dict(), "asymptotics": sols, "probe_results": records,
           "contradictions": len(contradictions(records))}
    _write(cfg, "verify.json", dumps(doc))
    return doc


def cmd_examples(cfg: RunConfig | None = None) -> dict:
    out = {}
    for name, fn in BUILTINS.items():
        sig = inspect.signature(fn)
        out[name] = {"params": {k: v.default for k, v in sig.parameters.items()}, "doc": (fn.__doc__ or "").strip().splitlines()[0]}
    return out


def _write(cfg: RunConfig, name: str, text: str) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscavg", description="Averaging analysis of asymptotically autonomous oscillators")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("analyze", "normal form, regime and asymptotics (report.json)"),
                        ("simulate", "direct simulation (traj_<i>.csv, simulate.json)"),
                        ("verify", "probe every verdict by simulation (verify.json)"),
                        ("examples", "list builtin systems")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="JSON run config")
        sp.add_argument("--system", help="builtin system name (ex0, ex1, ex2)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override")
        sp.add_argument("--out", help="output directory")
    return ap


def load_config(args) -> RunConfig:
    raw = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecValidationError(f"cannot read config: {exc}", "config") from exc
    if args.system:
        raw.setdefault("system", {})
        raw["system"] = {"builtin": args.system, "params": raw["system"].get("params", {})}
    raw = apply_overrides(raw, args.set)
    if args.out:
        raw["output_dir"] = args.out
    return RunConfig.from_dict(raw, args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "examples":
        sys.stdout.write(dumps(cmd_examples()))
        return EXIT_OK
    try:
        cfg = load_config(args)
        if args.command == "analyze":
            doc = cmd_analyze(cfg)
            v = doc["regime"]["verdicts"]
            print(f"region {doc['regime']['region']}, n={doc['regime']['n']}, verdicts: "
                  + (", ".join(f"{x['theorem_tag']} {x['stability']}" for x in v) or "none"))
            return EXIT_OK
        if args.command == "simulate":
            doc = cmd_simulate(cfg)
            print(f"{len(doc['members'])} trajectories written to {cfg.output_dir}")
            return EXIT_OK
        doc = cmd_verify(cfg)
        for rec in doc["probe_results"]:
            print(f"{rec['theorem_tag']}: {rec['status']}")
        return EXIT_CONTRADICTION if doc["contradictions"] else EXIT_OK
    except ResonanceDetected as exc:
        print(f"error (nres): {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except SpecValidationError as exc:
        print(f"error {exc.assumption}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AssumptionViolated as exc:
        print(f"error (assumption): {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IntegrationError as exc:
        print(f"error (integration): {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
