"""Command line front end: job validation, the solve pipeline and sweeps.

Subcommands::

    relmaup solve --job job.json --out DIR
    relmaup integrate (--job job.json | --x X Y --p PX PY --t-end T) --out DIR
    relmaup circular profile|radius|classify [flags] --out DIR
    relmaup limit --h H --c 1 2 4 ... --out DIR
    relmaup sweep --job sweep.json --out DIR --workers N

Exit status is 0 iff every verification passed; 1 if a check failed or a
sweep cell failed; 2 for invalid input; 3 for a computation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import circular
from .defaults import PROFILES, tolerance_profile
from .errors import ConfigError, NoCircularOrbit, RelMaupError, BracketFailure
from .homotopy import HomotopyWord, orbit_label, same_class
from .integrator import PhaseState, integrate, momentum_from_velocity, return_distance
from .optimizer import SolveSettings, minimize_in_class, poincare_bound_check
from .potentials import PotentialConfig
from .reparam import ode_residual, solution_from_minimizer

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

# ----------------------------------------------------------------------------
# job schemas

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

POTENTIAL_SCHEMA = {
    "type": "object",
    "required": ["centers", "strengths", "alpha"],
    "properties": {
        "centers": {"type": "array", "items": _POINT, "minItems": 1},
        "strengths": {"type": "array", "items": _NUM, "minItems": 1},
        "alpha": _NUM,
        "m": _NUM,
        "c": _NUM,
        "collision_radius": _NUM,
        "perturbation": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["zero", "constant", "gaussian"]},
                "value": _NUM, "amplitude": _NUM, "width": _NUM, "offset": _NUM,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

MODEL_SCHEMA = {
    "type": "object",
    "properties": {"kappa": _NUM, "alpha": _NUM, "m": _NUM, "c": _NUM},
    "additionalProperties": False,
}

SETTINGS_SCHEMA = {
    "type": "object",
    "properties": {
        "epsilon": _NUM,
        "norm_choice": {"enum": ["sup_distance", "h1_distance"]},
        "max_iterations": {"type": "integer", "minimum": 1},
        "gradient_tolerance": _NUM,
        "relative_tolerance": {"type": "boolean"},
        "initial_step": _NUM, "shrink": _NUM, "armijo": _NUM,
        "max_backtracks": {"type": "integer", "minimum": 1},
        "refinement_schedule": {"type": "array", "items": {"type": "integer", "minimum": 8}, "minItems": 1},
        "push_off_lambda": _NUM,
        "memory": {"type": "integer", "minimum": 1},
        "stagnation_window": {"type": "integer", "minimum": 1},
        "stagnation_rtol": _NUM,
        "active_band": _NUM,
    },
    "additionalProperties": False,
}

TOLERANCE_SCHEMA = {
    "type": "object",
    "properties": {k: ({"type": "array"} if k == "refinement_schedule" else _NUM) for k in PROFILES["default"]},
    "additionalProperties": False,
}

SOLVE_SCHEMA = {
    "type": "object",
    "required": ["potential", "word"],
    "properties": {
        "command": {"const": "solve"},
        "potential": POTENTIAL_SCHEMA,
        "h": _NUM,
        "E": _NUM,
        "word": {"type": "string"},
        "settings": SETTINGS_SCHEMA,
        "tolerances": TOLERANCE_SCHEMA,
        "tolerance_profile": {"enum": sorted(PROFILES)},
    },
    "oneOf": [{"required": ["h"]}, {"required": ["E"]}],
    "additionalProperties": False,
}

INTEGRATE_SCHEMA = {
    "type": "object",
    "required": ["potential", "initial", "t_end"],
    "properties": {
        "command": {"const": "integrate"},
        "potential": POTENTIAL_SCHEMA,
        "initial": {
            "type": "object",
            "required": ["x"],
            "properties": {"x": _POINT, "p": _POINT, "v": _POINT},
            "oneOf": [{"required": ["p"]}, {"required": ["v"]}],
            "additionalProperties": False,
        },
        "t_end": _NUM,
        "rtol": _NUM,
        "atol": _NUM,
        "collision_epsilon": _NUM,
    },
    "additionalProperties": False,
}

CELL_KINDS = ("solve", "classify", "radius", "limit_point")

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["kind", "base", "axes"],
    "properties": {
        "command": {"const": "sweep"},
        "kind": {"enum": list(CELL_KINDS)},
        "base": {"type": "object"},
        "axes": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"enum": ["h", "E", "alpha", "c", "L", "word"]},
            "additionalProperties": {"type": "array", "minItems": 1},
        },
        "tolerance_profile": {"enum": sorted(PROFILES)},
    },
    "additionalProperties": False,
}


class JobError(ValueError):
    """Invalid job input; ``diagnostics`` lists ``field: message`` strings."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def _field(path) -> str:
    parts = [str(p) for p in path]
    return ".".join(parts) if parts else "<root>"


def validate(job: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(job), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise JobError([f"{_field(e.absolute_path)}: {e.message}" for e in errors])


def load_job(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        job = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(job, dict):
        raise JobError(["<root>: job must be a JSON object"])
    return job


def _physics_checks(job: dict, need_h: bool) -> list[str]:
    out = []
    pot = job.get("potential", {})
    alpha = pot.get("alpha")
    if isinstance(alpha, (int, float)) and not alpha > 1:
        out.append(f"potential.alpha: strong-force condition requires alpha > 1, got {alpha}")
    if need_h:
        m = pot.get("m", 1.0)
        c = pot.get("c", 1.0)
        h = job["h"] if "h" in job else job.get("E", 0.0) - m * c**2
        if isinstance(h, (int, float)) and not h > 0:
            out.append(f"h: energy excess must be > 0 (fixed positive h), got {h}")
    return out


def _potential(d: dict) -> PotentialConfig:
    try:
        return PotentialConfig.from_dict(d)
    except ConfigError as exc:
        raise JobError([f"potential.{exc.field}: {exc}"]) from None


def _word(text: str) -> HomotopyWord:
    try:
        word = HomotopyWord.parse(text)
    except ValueError as exc:
        raise JobError([f"word: {exc}"]) from None
    if word.is_trivial:
        raise JobError(["word: the homotopy class must be non-trivial"])
    return word


# ----------------------------------------------------------------------------
# solve

def _check(value, tol, ok=None) -> dict:
    passed = bool(value <= tol) if ok is None else bool(ok)
    return {"value": value, "tolerance": tol, "pass": passed}


def solve_pipeline(job: dict, profile: str = "default") -> dict:
    """Validate and run a solve job in memory; returns artifacts and report."""
    validate(job, SOLVE_SCHEMA)
    problems = _physics_checks(job, need_h=True)
    if problems:
        raise JobError(problems)
    cfg = _potential(job["potential"])
    word = _word(job["word"])
    if max(abs(g) for g in word.letters) > cfg.n_centers:
        raise JobError([f"word: uses a generator beyond the {cfg.n_centers} centre(s)"])
    h = float(job["h"]) if "h" in job else float(job["E"]) - cfg.rest_energy
    tol = tolerance_profile(job.get("tolerance_profile", profile), job.get("tolerances"))
    settings_d = {
        "gradient_tolerance": tol["gradient_tolerance"],
        "refinement_schedule": tol["refinement_schedule"],
    }
    settings_d.update(job.get("settings", {}))
    try:
        settings = SolveSettings.from_dict(settings_d)
    except (TypeError, ValueError) as exc:
        raise JobError([f"settings: {exc}"]) from None

    result = minimize_in_class(cfg, h, word, settings, raise_on_failure=False)
    sol = solution_from_minimizer(result.minimizer, cfg, h, int(tol["n_times"]))
    ret = return_distance(cfg, sol.x[0], sol.v[0], sol.T, rtol=tol["integrator_rtol"],
                          atol=tol["integrator_atol"])
    sol.residuals["period_return"] = ret
    _, _, poincare_ok = poincare_bound_check(result.minimizer, cfg.centers)
    checks = {
        "converged": _check(result.gradient_norm, result.gradient_tolerance, result.converged),
        "class_certificate": {"value": str(result.class_certificate), "expected": str(word),
                              "pass": same_class(result.class_certificate, word)},
        "margin": {"value": min(result.margin_report), "tolerance": settings.epsilon,
                   "pass": min(result.margin_report) >= settings.epsilon * (1 - 1e-12)},
        "poincare_bound": {"value": poincare_ok, "pass": poincare_ok},
        "energy_law": _check(sol.residuals["energy_law"], tol["energy_law"]),
        "subluminal": {"value": sol.residuals["max_speed_over_c"], "tolerance": 1.0,
                       "pass": sol.residuals["max_speed_over_c"] < 1.0},
        "constancy_spread": _check(sol.lambda_spread, tol["constancy_spread"]),
        "ode_residual": _check(sol.residuals["ode"], tol["ode_residual"]),
        "period_return": _check(ret, tol["period_return"]),
    }
    report = {
        "command": "solve",
        "word": str(word),
        "orbit_label": orbit_label(word),
        "h": h,
        "E": h + cfg.rest_energy,
        "tolerance_profile": job.get("tolerance_profile", profile),
        "tolerances": tol,
        "T": sol.T,
        "lambda": sol.lam,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks.values()),
    }
    return {"result": result, "solution": sol, "report": report, "settings": settings}


def write_solve_artifacts(out: Path, run: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    result, sol = run["result"], run["solution"]
    summary = result.summary()
    summary["settings"] = run["settings"].to_dict()
    (out / "solve_result.json").write_text(json.dumps(summary, indent=2))
    (out / "minimizer.csv").write_text(result.minimizer.to_csv())
    with open(out / "iterations.jsonl", "w") as fh:
        for line in result.log:
            fh.write(json.dumps(line) + "\n")
    (out / "solution.csv").write_text(sol.to_csv())
    (out / "solution.json").write_text(json.dumps(sol.metadata(), indent=2))
    (out / "report.json").write_text(json.dumps(run["report"], indent=2, default=str))


def run_solve(job: dict, out: Path, profile: str = "default") -> int:
    run = solve_pipeline(job, profile)
    write_solve_artifacts(out, run)
    for name, chk in run["report"]["checks"].items():
        logger.info("%-18s %s  %s", name, "PASS" if chk["pass"] else "FAIL", chk.get("value"))
    return EXIT_OK if run["report"]["all_pass"] else EXIT_CHECK


# ----------------------------------------------------------------------------
# integrate

def run_integrate(job: dict, out: Path) -> int:
    validate(job, INTEGRATE_SCHEMA)
    problems = _physics_checks(job, need_h=False)
    if problems:
        raise JobError(problems)
    cfg = _potential(job["potential"])
    ini = job["initial"]
    p = ini["p"] if "p" in ini else momentum_from_velocity(cfg, np.asarray(ini["v"], float))
    res = integrate(cfg, PhaseState(ini["x"], p), float(job["t_end"]),
                    rtol=job.get("rtol", 1e-10), atol=job.get("atol", 1e-12),
                    collision_epsilon=job.get("collision_epsilon", 1e-6))
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(res.to_csv())
    report = {"command": "integrate", **res.summary(), "all_pass": not res.collided}
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return EXIT_OK if not res.collided else EXIT_CHECK


# ----------------------------------------------------------------------------
# circular / limit

def _model(args_or_dict) -> circular.ModelConfig:
    get = args_or_dict.get if isinstance(args_or_dict, dict) else lambda k, d=None: getattr(args_or_dict, k, d)
    try:
        return circular.ModelConfig(
            kappa=float(get("kappa", 1.0)), alpha=float(get("alpha", 2.0)),
            m=float(get("m", 1.0)), c=float(get("c", 1.0)),
        )
    except RelMaupError as exc:
        raise JobError([f"alpha: strong-force condition requires alpha > 1 ({exc})"]) from None
    except ValueError as exc:
        raise JobError([f"model: {exc}"]) from None


def run_circular(args, out: Path) -> int:
    model = _model(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.what == "profile":
        prof = circular.radial_profile(model, args.r_min, args.r_max, args.per_decade)
        (out / "profile.csv").write_text(prof.to_csv())
        report = {"command": "circular profile", "rows": len(prof.r), "all_pass": True}
    elif args.what == "radius":
        if args.E is None:
            raise JobError(["E: required for circular radius"])
        try:
            radii = circular.radius_from_energy(model, args.E)
            report = {"command": "circular radius", "E": args.E, "radii": radii,
                      "omega": [float(circular.omega_from_radius(model, r)) for r in radii],
                      "eta": circular.eta(model), "all_pass": True}
        except NoCircularOrbit as exc:
            report = {"command": "circular radius", "E": args.E, "radii": [],
                      "eta": circular.eta(model), "error": str(exc), "all_pass": False}
    else:
        if args.E is None or args.L is None:
            raise JobError(["E, L: both required for circular classify"])
        oc = circular.classify_orbits(model, args.E, args.L)
        report = {"command": "circular classify", **oc.as_dict(), "all_pass": True}
        (out / "classification.json").write_text(json.dumps(oc.as_dict(), indent=2))
    (out / "report.json").write_text(json.dumps(report, indent=2, default=str))
    return EXIT_OK if report["all_pass"] else EXIT_CHECK


def run_limit(args, out: Path) -> int:
    model = _model(args)
    table = circular.nonrelativistic_limit(model, args.h, args.c_values)
    out.mkdir(parents=True, exist_ok=True)
    (out / "limit.csv").write_text(table.to_csv())
    report = {"command": "limit", **table.as_dict(), "all_pass": table.strictly_decreasing}
    (out / "report.json").write_text(json.dumps(report, indent=2, default=str))
    return EXIT_OK if table.strictly_decreasing else EXIT_CHECK


# ----------------------------------------------------------------------------
# sweep

def expand_sweep(job: dict) -> list[dict]:
    """Cartesian product of the axes, in axis order; cell index = position."""
    validate(job, SWEEP_SCHEMA)
    axes = job["axes"]
    names = list(axes)
    cells = []
    for idx, values in enumerate(itertools.product(*(axes[n] for n in names))):
        cells.append({"index": idx, "kind": job["kind"], "base": job["base"],
                      "params": dict(zip(names, values)),
                      "profile": job.get("tolerance_profile", "default")})
    return cells


def _cell_job(cell: dict) -> dict:
    job = json.loads(json.dumps(cell["base"]))
    p = cell["params"]
    if cell["kind"] == "solve":
        pot = job.setdefault("potential", {})
        for key in ("alpha", "c"):
            if key in p:
                pot[key] = p[key]
        for key in ("h", "E"):
            if key in p:
                job.pop("h", None)
                job.pop("E", None)
                job[key] = p[key]
        if "word" in p:
            job["word"] = p["word"]
    else:
        job.update(p)
    return job


def run_cell(cell: dict) -> dict:
    """Execute one sweep cell; never raises (failures are reported in the row)."""
    row = {"cell": cell["index"], **cell["params"]}
    try:
        job = _cell_job(cell)
        kind = cell["kind"]
        if kind == "solve":
            run = solve_pipeline(job, cell["profile"])
            rep = run["report"]
            row.update(status="ok" if rep["all_pass"] else "check_failed",
                       word=rep["word"], orbit_label=rep["orbit_label"],
                       maupertuis_value=run["result"].maupertuis_value, T=rep["T"],
                       ode_residual=rep["checks"]["ode_residual"]["value"],
                       period_return=rep["checks"]["period_return"]["value"])
        elif kind == "classify":
            oc = circular.classify_orbits(_model(job), float(job["E"]), float(job["L"]))
            row.update(status="ok", verdict=oc.verdict, n_critical_points=oc.n_critical_points)
        elif kind == "radius":
            radii = circular.radius_from_energy(_model(job), float(job["E"]))
            row.update(status="ok", radii=" ".join(f"{r:.17g}" for r in radii))
        else:  # limit_point: inner-branch radius of excess h at speed of light c
            model = _model(job)
            h = float(job["h"])
            if not h + model.rest_energy > circular.eta(model):
                raise NoCircularOrbit("E = h + m c^2 does not exceed eta")
            row.update(status="ok", r_h=circular.radius_from_excess(model, h)[0])
    except (JobError, RelMaupError, BracketFailure, ValueError, KeyError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def run_sweep(job: dict, out: Path, workers: int = 1) -> int:
    cells = expand_sweep(job)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    rows.sort(key=lambda r: r["cell"])
    columns: list[str] = []
    for r in rows:
        columns.extend(k for k in r if k not in columns)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(buf.getvalue())
    failed = [r["cell"] for r in rows if r["status"] != "ok"]
    groups: dict[str, list[int]] = {}
    for r in rows:
        if "orbit_label" in r:
            groups.setdefault(r["orbit_label"], []).append(r["cell"])
    report = {"command": "sweep", "kind": job["kind"], "cells": len(rows), "failed_cells": failed,
              "failures": {r["cell"]: r.get("error", r["status"]) for r in rows if r["status"] != "ok"},
              "orbit_groups": groups, "all_pass": not failed}
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return EXIT_OK if not failed else EXIT_CHECK


# ----------------------------------------------------------------------------
# argument parsing

def _add_model_flags(p):
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relmaup", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, job_required=False):
        p.add_argument("--job", required=job_required, help="JSON job file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--tolerance-profile", default="default", choices=sorted(PROFILES))
        p.add_argument("--workers", type=int, default=1)

    common(sub.add_parser("solve", help="minimize, reparameterize and verify"), job_required=True)

    p = sub.add_parser("integrate", help="integrate the Hamiltonian system")
    common(p)
    _add_model_flags(p)
    p.add_argument("--x", type=float, nargs=2)
    p.add_argument("--p", type=float, nargs=2)
    p.add_argument("--v", type=float, nargs=2)
    p.add_argument("--t-end", type=float)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)

    p = sub.add_parser("circular", help="single-centre circular orbit analysis")
    p.add_argument("what", choices=["profile", "radius", "classify"])
    common(p)
    _add_model_flags(p)
    p.add_argument("--E", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=1e3)
    p.add_argument("--per-decade", type=int, default=20)

    p = sub.add_parser("limit", help="circular radius as c grows")
    common(p)
    _add_model_flags(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--c-values", type=float, nargs="+", default=[2.0**k for k in range(11)])

    common(sub.add_parser("sweep", help="run a grid of independent jobs"), job_required=True)
    return parser


def _integrate_job_from_flags(args) -> dict:
    if args.x is None or args.t_end is None or (args.p is None) == (args.v is None):
        raise JobError(["initial: give --x, --t-end and exactly one of --p / --v (or --job)"])
    initial = {"x": args.x, "p" if args.p is not None else "v": args.p or args.v}
    return {
        "potential": {"centers": [[0.0, 0.0]], "strengths": [args.kappa], "alpha": args.alpha,
                      "m": args.m, "c": args.c},
        "initial": initial, "t_end": args.t_end, "rtol": args.rtol, "atol": args.atol,
    }


_FLAG_KEYS = {"kappa", "alpha", "m", "c", "E", "L", "h", "c_values", "r_min", "r_max", "per_decade"}


def _apply_job_to_args(job: dict, args) -> None:
    """Job-file values for the flag-driven subcommands (job wins over flags)."""
    unknown = sorted(set(job) - _FLAG_KEYS - {"command", "what"})
    if unknown:
        raise JobError([f"{k}: unknown field" for k in unknown])
    for key, value in job.items():
        if key in _FLAG_KEYS:
            setattr(args, key, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        if args.command == "solve":
            return run_solve(load_job(args.job), out, args.tolerance_profile)
        if args.command == "integrate":
            job = load_job(args.job) if args.job else _integrate_job_from_flags(args)
            return run_integrate(job, out)
        if args.command in ("circular", "limit"):
            if args.job:
                _apply_job_to_args(load_job(args.job), args)
            return run_circular(args, out) if args.command == "circular" else run_limit(args, out)
        return run_sweep(load_job(args.job), out, args.workers)
    except JobError as exc:
        for d in exc.diagnostics:
            print(f"invalid job: {d}", file=sys.stderr)
        return EXIT_INPUT
    except RelMaupError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
