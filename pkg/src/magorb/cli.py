"""Command-line entry point.

    magorb <orbit|sweep|critical-value|potential|verify|geodesic>
           --config <path> [--out <dir>]

All numeric parameters live in a single JSON config (runs are archival
artifacts); flags only pick the command and paths.  Exit codes: 0 success,
2 non-convergence, 3 invalid config/input, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np
import jsonschema

from . import artifacts as art
from . import dynamics as dyn
from . import geometry as geo
from . import loopspace as ls
from . import mane
from . import solvers
from .errors import (ConfigError, DomainError, FluxUndefinedError, MagorbError,
                     ModelError, NoNegativeSeedError, NotBoundedBelowError)

log = logging.getLogger("magorb")

EXIT_OK = 0
EXIT_UNCONVERGED = 2
EXIT_INVALID = 3
EXIT_INTERNAL = 4

_MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(geo.MODEL_KINDS)},
        "B": {"type": "number"},
        "eta_amplitude": {"type": "number"},
        "lambda": {"type": "number", "exclusiveMinimum": 1.0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_SOLVER_SCHEMA = {
    "type": "object",
    "properties": {
        "max_iters": {"type": "integer", "exclusiveMinimum": 0},
        "grad_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "step_init": {"type": "number", "exclusiveMinimum": 0},
        "armijo_c1": {"type": "number", "exclusiveMinimum": 0},
        "armijo_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "T_floor": {"type": "number", "exclusiveMinimum": 0},
        "T1": {"type": "number", "exclusiveMinimum": 0},
        "restarts": {"type": "integer", "exclusiveMinimum": 0},
        "string_iters": {"type": "integer", "exclusiveMinimum": 0},
        "refine_iters": {"type": "integer", "exclusiveMinimum": 0},
        "stall_window": {"type": "integer", "exclusiveMinimum": 0},
        "snapshot_stride": {"type": "integer", "exclusiveMinimum": 0},
        "mono_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_COMMON = {
    "model": _MODEL_SCHEMA,
    "seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string"},
    "workers": {"type": "integer", "exclusiveMinimum": 0},
    "svg": {"type": "boolean"},
}

_POSNUM = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_INTPAIR = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

COMMAND_SCHEMAS = {
    "orbit": {
        "type": "object",
        "properties": {**_COMMON, "k": _POSNUM, "class": _INTPAIR,
                       "N": {"type": "integer", "minimum": 8},
                       "P": {"type": "integer", "minimum": 8},
                       "solver": _SOLVER_SCHEMA},
        "required": ["model", "k"],
        "additionalProperties": False,
    },
    "sweep": {
        "type": "object",
        "properties": {**_COMMON,
                       "k_range": {
                           "type": "object",
                           "properties": {"min": _POSNUM, "max": _POSNUM,
                                          "steps": {"type": "integer", "minimum": 1}},
                           "required": ["min", "max", "steps"],
                           "additionalProperties": False},
                       "N": {"type": "integer", "minimum": 8},
                       "P": {"type": "integer", "minimum": 8},
                       "solver": _SOLVER_SCHEMA},
        "required": ["model", "k_range"],
        "additionalProperties": False,
    },
    "critical-value": {
        "type": "object",
        "properties": {**_COMMON, "k_max": _POSNUM, "tol": _POSNUM,
                       "domain_radius": _POSNUM,
                       "grid_n": {"type": "integer", "minimum": 16},
                       "bisection_steps": {"type": "integer", "minimum": 1},
                       "N": {"type": "integer", "minimum": 8}},
        "required": ["model"],
        "additionalProperties": False,
    },
    "potential": {
        "type": "object",
        "properties": {**_COMMON, "k": _POSNUM, "q0": _PAIR, "q1": _PAIR,
                       "n_segments": {"type": "integer", "minimum": 8},
                       "max_iters": {"type": "integer", "minimum": 1}},
        "required": ["model", "k", "q0", "q1"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {**_COMMON, "k": _POSNUM,
                       "loop_csv": {"type": "string"},
                       "loop_meta": {"type": "string"}},
        "required": ["model", "k", "loop_csv", "loop_meta"],
        "additionalProperties": False,
    },
    "geodesic": {
        "type": "object",
        "properties": {**_COMMON, "q0": _PAIR, "v0": _PAIR,
                       "duration": _POSNUM, "step": _POSNUM},
        "required": ["model", "q0", "v0", "duration"],
        "additionalProperties": False,
    },
}


def load_config(path: str, command: str) -> dict:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    schema = COMMAND_SCHEMAS[command]
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message} at "
                          f"{'/'.join(str(p) for p in exc.absolute_path) or '<root>'}")
    if command == "sweep":
        kr = cfg["k_range"]
        if kr["steps"] > 1 and not kr["min"] < kr["max"]:
            raise ConfigError("k_range needs min < max")
        if kr["steps"] == 1 and kr["min"] > kr["max"]:
            raise ConfigError("k_range needs min <= max")
    return cfg


def build_model(cfg: dict) -> geo.SurfaceModel:
    m = cfg["model"]
    return geo.make_model(m["kind"], m.get("B", 0.0),
                          m.get("eta_amplitude", 0.0), m.get("lambda"))


def build_solver_config(cfg: dict) -> solvers.SolverConfig:
    kwargs = dict(cfg.get("solver", {}))
    if "N" in cfg:
        kwargs["N"] = cfg["N"]
    if "P" in cfg:
        kwargs["P"] = cfg["P"]
    kwargs["seed"] = cfg.get("seed", 0)
    return solvers.SolverConfig(**kwargs)


def _closure_block(res) -> dict:
    if res is None:
        return {}
    return {"position_gap": res.position_gap, "velocity_gap": res.velocity_gap,
            "energy_error": res.energy_error, "energy_drift": res.energy_drift}


def _action_block(rep) -> dict:
    return {"kinetic": rep.kinetic, "kT": rep.period_term, "flux": rep.flux,
            "total": rep.total, "grad_loop_norm": rep.grad_loop_norm,
            "grad_T": rep.grad_T}


def _diagnostics_payload(diag: solvers.PSDiagnostics) -> dict:
    monitor = solvers.ps_monitor(diag)
    return {
        "series": diag.series(),
        "monitor": {
            "bound_b": monitor.bound_b,
            "A_used": monitor.A_used,
            "B_used": monitor.B_used,
            "theta_sup": monitor.theta_sup_used,
            "energy_violations": monitor.energy_violations,
            "cs_violations": monitor.cs_violations,
            "hausdorff_C": monitor.hausdorff_C,
            "n_iterates": monitor.n_iterates,
        },
    }


def _write_run_files(out: art.StagedOutput, model, timed, k, suffix=""):
    """Loop csv/sidecar plus the integrated verification orbit."""
    art.write_loop(timed, out.path(f"loop{suffix}.csv"), out.path(f"loop{suffix}.json"))
    try:
        start = dyn.orbit_from_critical(model, timed)
        orbit = dyn.integrate(model, start, timed.T)
        art.write_orbit(orbit, out.path(f"orbit{suffix}.csv"))
        return orbit
    except MagorbError:
        return None


def cmd_orbit(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    scfg = build_solver_config(cfg)
    k = cfg["k"]
    m, n = cfg.get("class", [0, 0])
    cls = geo.FreeHomotopyClass(m, n)
    out = art.StagedOutput(out_dir)
    try:
        if cls.trivial:
            res = solvers.mountain_pass(model, k, scfg)
            timed, report = res.saddle, res.saddle_report
            mu, converged, flags = res.mu_estimate, res.converged, res.flags
            closure = res.verification
            extra = {"not_strict_minimizer": res.not_strict_minimizer,
                     "sup_history_tail": res.sup_history[-10:]}
        else:
            mres = solvers.minimize(model, k, cls, None, scfg)
            timed, report = mres.timed, mres.report
            mu, converged, flags = mres.report.total, mres.converged, mres.flags
            closure = mres.closure
            extra = {}
        diag = res.diagnostics if cls.trivial else mres.diagnostics
        orbit = _write_run_files(out, model, timed, k)
        art.dump_json(_diagnostics_payload(diag), out.path("diagnostics.json"))
        result = {
            "command": "orbit", "k": k, "class": list(cls.label()),
            "solver": "mountain_pass" if cls.trivial else "minimize",
            "mu": mu, "converged": converged, "flags": flags,
            "action": _action_block(report),
            "closure": _closure_block(closure),
            "saddle_loop": "loop.csv", "loop_meta": "loop.json",
            "orbit_csv": "orbit.csv" if orbit else None,
            "diagnostics": "diagnostics.json",
            "seed": cfg.get("seed", 0),
            **extra,
        }
        art.dump_json(result, out.path("result.json"))
        if cfg.get("svg", False):
            art.write_svg(model, out.path("orbit.svg"), timed.loop.points,
                          orbit.qs if orbit else None)
    except Exception:
        out.abort()
        raise
    out.commit()
    return EXIT_OK if converged else EXIT_UNCONVERGED


def _sweep_worker(payload):
    model_cfg, k, solver_kwargs = payload
    model = geo.make_model(**model_cfg)
    scfg = solvers.SolverConfig(**solver_kwargs)
    return solvers.sweep_single(model, k, scfg)


def cmd_sweep(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    scfg = build_solver_config(cfg)
    kr = cfg["k_range"]
    ks = [float(x) for x in np.linspace(kr["min"], kr["max"], kr["steps"])]
    workers = cfg.get("workers") or os.cpu_count() or 1

    if workers > 1 and len(ks) > 1:
        model_cfg = {"kind": model.kind, "B": model.B,
                     "eta_amplitude": model.eta_amplitude, "lam": model.lam}
        solver_kwargs = {f.name: getattr(scfg, f.name)
                         for f in dc_fields(solvers.SolverConfig)}
        payloads = [(model_cfg, k, solver_kwargs) for k in ks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_sweep_worker, payloads))
        ok = sum(1 for a, b in zip(entries, entries[1:])
                 if a.mu is not None and b.mu is not None
                 and b.mu >= a.mu - scfg.mono_tol)
        pairs = sum(1 for a, b in zip(entries, entries[1:])
                    if a.mu is not None and b.mu is not None)
        sweep = solvers.SweepResult(entries=entries,
                                    monotone_fraction=ok / pairs if pairs else 1.0,
                                    mono_tol=scfg.mono_tol)
    else:
        sweep = solvers.energy_sweep(model, ks, scfg)

    out = art.StagedOutput(out_dir)
    try:
        rows = []
        per_k = []
        for i, entry in enumerate(sweep.entries):
            tag = f"_{i:03d}"
            blob = {"k": entry.k, "mu": entry.mu, "converged": entry.converged,
                    "flags": entry.flags, "error": entry.error,
                    "closure": {}, "saddle_loop": None}
            if entry.result is not None:
                blob["saddle_loop"] = f"loop{tag}.csv"
                blob["closure"] = _closure_block(entry.result.verification)
                blob["action"] = _action_block(entry.result.saddle_report)
                art.write_loop(entry.result.saddle, out.path(f"loop{tag}.csv"),
                               out.path(f"loop{tag}.json"))
            art.dump_json(blob, out.path(f"result{tag}.json"))
            per_k.append(blob)
            rows.append([
                art.FLOAT_FMT % entry.k,
                art.FLOAT_FMT % entry.mu if entry.mu is not None else "",
                art.FLOAT_FMT % entry.position_gap if entry.position_gap is not None else "",
                art.FLOAT_FMT % entry.energy_error if entry.energy_error is not None else "",
                "1" if entry.converged else "0",
            ])
        with open(out.path("sweep.csv"), "w", newline="") as fh:
            import csv as _csv
            w = _csv.writer(fh)
            w.writerow(["k", "mu", "position_gap", "energy_error", "converged"])
            w.writerows(rows)
        art.dump_json({
            "command": "sweep", "k_values": ks,
            "monotone_fraction": sweep.monotone_fraction,
            "mono_tol": sweep.mono_tol,
            "entries": per_k, "seed": cfg.get("seed", 0),
        }, out.path("result.json"))
    except Exception:
        out.abort()
        raise
    out.commit()
    n_conv = sum(1 for e in sweep.entries if e.converged)
    return EXIT_OK if n_conv >= 0.9 * len(sweep.entries) else EXIT_UNCONVERGED


def cmd_critical_value(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    opts = mane.BracketOptions(
        bisection_steps=cfg.get("bisection_steps", 12),
        search=mane.SearchBudget(seed=cfg.get("seed", 0),
                                 N=cfg.get("N", 192)),
        domain_radius=cfg.get("domain_radius"),
        grid_n=cfg.get("grid_n"),
    )
    bracket = mane.critical_value_bracket(model, cfg.get("k_max", 2.0),
                                          cfg.get("tol", 0.02), opts)
    out = art.StagedOutput(out_dir)
    try:
        certs = {"per_radius": bracket.certificates["per_radius"],
                 "lower_action": bracket.certificates["lower_action"],
                 "lower_loop": None}
        neg = bracket.certificates["lower_loop"]
        if neg is not None:
            art.write_loop(neg, out.path("negative_loop.csv"),
                           out.path("negative_loop.json"))
            certs["lower_loop"] = "negative_loop.csv"
        art.dump_json({
            "command": "critical-value",
            "lower": bracket.lower, "upper": bracket.upper,
            "consistent": bracket.consistent, "flags": bracket.flags,
            "grid_spec": bracket.grid_spec, "certificates": certs,
            "seed": cfg.get("seed", 0),
        }, out.path("result.json"))
    except Exception:
        out.abort()
        raise
    out.commit()
    return EXIT_OK


def cmd_potential(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    opts = mane.PotentialOptions(
        n_segments=cfg.get("n_segments", 64),
        max_iters=cfg.get("max_iters", 600),
        search=mane.SearchBudget(seed=cfg.get("seed", 0)),
    )
    est = mane.mane_potential(model, cfg["q0"], cfg["q1"], cfg["k"], opts)
    out = art.StagedOutput(out_dir)
    try:
        payload = {
            "command": "potential", "k": est.k,
            "q0": list(est.q0), "q1": list(est.q1),
            "value": est.value, "unbounded": est.unbounded,
            "converged": est.converged, "T": est.T, "flags": est.flags,
            "seed": cfg.get("seed", 0),
        }
        if est.witness is not None:
            payload["witness"] = {
                "loop_action": est.witness["loop_action"],
                "copies": est.witness["copies"],
                "witness_value": est.witness["witness_value"],
            }
        if est.path_points is not None:
            np.savetxt(out.path("path.csv"), est.path_points, delimiter=",",
                       header="x,y", comments="", fmt="%.17g")
            payload["path_csv"] = "path.csv"
        art.dump_json(payload, out.path("result.json"))
    except Exception:
        out.abort()
        raise
    out.commit()
    return EXIT_OK


def cmd_verify(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    timed = art.read_loop(model, Path(cfg["loop_csv"]), Path(cfg["loop_meta"]))
    residual = dyn.closure_residual(model, timed, cfg["k"])
    out = art.StagedOutput(out_dir)
    try:
        art.dump_json({"command": "verify", "k": cfg["k"],
                       "closure": _closure_block(residual)},
                      out.path("result.json"))
    except Exception:
        out.abort()
        raise
    out.commit()
    return EXIT_OK


def cmd_geodesic(cfg: dict, out_dir: Path) -> int:
    model = build_model(cfg)
    state = dyn.PhaseState(np.asarray(cfg["q0"], dtype=float),
                           np.asarray(cfg["v0"], dtype=float))
    opts = dyn.IntegrateOptions(step=cfg.get("step"))
    orbit = dyn.integrate(model, state, cfg["duration"], opts)
    out = art.StagedOutput(out_dir)
    try:
        art.write_orbit(orbit, out.path("orbit.csv"))
        art.dump_json({"command": "geodesic", "duration": cfg["duration"],
                       "energy_drift": orbit.energy_drift,
                       "steps": orbit.n_steps, "step": orbit.step,
                       "flags": orbit.flags}, out.path("result.json"))
        if cfg.get("svg", False):
            art.write_svg(model, out.path("orbit.svg"), None, orbit.qs)
    except Exception:
        out.abort()
        raise
    out.commit()
    return EXIT_OK


COMMANDS = {
    "orbit": cmd_orbit,
    "sweep": cmd_sweep,
    "critical-value": cmd_critical_value,
    "potential": cmd_potential,
    "verify": cmd_verify,
    "geodesic": cmd_geodesic,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="magorb",
        description="Closed orbits of magnetic flows on model surfaces.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)

    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("MAGORB_LOG", "error"),
                                         logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="magorb %(levelname)s %(message)s")

    try:
        cfg = load_config(args.config, args.command)
        out_dir = Path(args.out or cfg.get("output_dir", "magorb-out"))
        code = COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, ModelError, DomainError, FluxUndefinedError,
            NoNegativeSeedError, NotBoundedBelowError) as exc:
        print(f"magorb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MagorbError as exc:
        print(f"magorb: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"magorb: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return code


if __name__ == "__main__":
    sys.exit(main())
