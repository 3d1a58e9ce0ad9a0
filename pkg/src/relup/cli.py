"""Command-line entry point.

    relup run <config>            single analysis or curve, as the config says
    relup curve <config>          reliability curve (config needs a curve section)
    relup example <1|2|3>         built-in worked examples with oracle checks
    relup validate <config>       check a config without computing anything

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 64 usage.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

from . import kernels
from .benchmarks import run_example, reliability_curve
from .config import ConfigError, Study, build_study
from .equivalent import BoundViolationError, augment
from .results import curve_csv, dumps
from .solvers._common import SolverError
from .updating import METHODS, update_reliability

__all__ = ["main", "run_study", "EXIT_OK", "EXIT_INVALID", "EXIT_NUMERICAL", "EXIT_USAGE"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _grid(values):
    out = []
    for v in values:
        out += [float(x) for x in v.split(",") if x.strip()]
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="results path (JSON); curves also write a .csv next to it")
    common.add_argument("--quiet", action="store_true", help="no summary on stderr")
    solve = _Parser(add_help=False)
    solve.add_argument("--solver", choices=METHODS)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--n", type=int, help="samples (mc) or line searches (apis)")

    p = _Parser(prog="relup", description="Bayesian reliability updating with equality information.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", parents=[common, solve], help="run a config")
    r.add_argument("config")
    r.add_argument("--grid", nargs="+", help="curve grid override (spaces or commas)")
    c = sub.add_parser("curve", parents=[common, solve], help="reliability curve from a config")
    c.add_argument("config")
    c.add_argument("--grid", nargs="+", help="grid override (spaces or commas)")
    e = sub.add_parser("example", parents=[common, solve], help="run a built-in example")
    e.add_argument("example_id", type=int, choices=(1, 2, 3))
    v = sub.add_parser("validate", parents=[common], help="validate a config")
    v.add_argument("config")
    return p


def _document(kind: str, config: dict) -> dict:
    return {
        "schema_version": 1, "kind": kind, "status": "ok",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "backend": kernels.BACKEND, "config": config,
        "prior": None, "conditional": None, "curve": None, "error": None,
    }


def _fail(doc: dict, exc: Exception) -> dict:
    doc["status"] = "error"
    doc["error"] = {"type": type(exc).__name__, "message": str(exc.args[0] if exc.args else exc),
                    "diagnostics": getattr(exc, "diagnostics", None)}
    return doc


def _curve_points(points) -> list[dict]:
    return [vars(p) for p in points]


def run_study(study: Study) -> dict:
    """Results document of a validated study; numerical failures are recorded, not raised."""
    doc = _document("curve" if study.is_curve else "single", study.config)
    try:
        if study.is_curve:
            points = reliability_curve(study.model, study.event, study.schedule, study.grid, study.solver,
                                       study.strategy)
            doc["curve"] = _curve_points(points)
        else:
            event = study.event()
            prior = update_reliability(augment(study.model, event, []), study.solver)
            doc["prior"] = prior.to_dict()
            if study.likelihoods:
                problem = augment(study.model, event, study.likelihoods, study.strategy)
                doc["conditional"] = update_reliability(problem, study.solver).to_dict()
            else:
                doc["conditional"] = doc["prior"]
    except (SolverError, BoundViolationError, ValueError) as exc:
        _fail(doc, exc)
    return doc


def _paths(out: str | None, curve: bool) -> tuple[Path | None, Path | None]:
    if out is None:
        return None, None
    path = Path(out)
    if not curve:
        return path, None
    if path.suffix == ".csv":
        return path.with_suffix(".json"), path
    return path, path.with_suffix(".csv")


def _emit(doc: dict, out: str | None, quiet: bool) -> int:
    curve = doc["kind"] == "curve"
    json_path, csv_path = _paths(out, curve)
    rows = [(p["n"], p["beta_prior"], p["beta_conditional"], p["ci_low"], p["ci_high"])
            for p in doc["curve"] or []]
    text = dumps(doc)
    if json_path is None:
        sys.stdout.write(curve_csv(rows) if curve and doc["status"] == "ok" else text)
    else:
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(text)
        if csv_path is not None and doc["status"] == "ok":
            csv_path.write_text(curve_csv(rows))
    if doc["status"] != "ok":
        sys.stderr.write(f"relup: numerical failure: {doc['error']['message']}\n")
        return EXIT_NUMERICAL
    if not quiet:
        _summary(doc)
    return EXIT_OK


def _summary(doc: dict):
    w = sys.stderr.write
    if doc["kind"] == "curve":
        w(f"curve: {len(doc['curve'])} points\n")
    else:
        for key in ("prior", "conditional"):
            res = doc[key]
            if res is not None:
                w(f"{key:12s} p = {res['p_conditional']:.6g}  beta = {res['beta_conditional']:.4f}"
                  f"  ({res['solver']}, {res['n_evals']} evaluations)\n")
    checks = doc.get("checks")
    if checks:
        for name, ok in checks.items():
            w(f"check {name}: {'pass' if ok else 'FAIL'}\n")


def _overrides(args) -> dict:
    return {"method": getattr(args, "solver", None), "seed": getattr(args, "seed", None),
            "n": getattr(args, "n", None), "grid": _grid(args.grid) if getattr(args, "grid", None) else None}


def _example(args) -> int:
    cfg = {"example": args.example_id, "solver": args.solver, "seed": args.seed, "n": args.n}
    try:
        report = run_example(args.example_id, args.solver, seed=args.seed, n=args.n)
    except (SolverError, BoundViolationError, ValueError) as exc:
        return _emit(_fail(_document("curve" if args.example_id == 3 else "single", cfg), exc),
                     args.out, args.quiet)
    cfg.update(solver=report.solver, seed=report.seed)
    if report.curve is not None:
        doc = _document("curve", cfg)
        doc["curve"] = _curve_points(report.curve)
    else:
        doc = _document("single", cfg)
        doc["prior"], doc["conditional"] = report.prior, report.conditional
    doc["oracles"], doc["checks"] = report.oracles, report.checks
    return _emit(doc, args.out, args.quiet)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "example":
        return _example(args)
    try:
        study = build_study(args.config, _overrides(args))
    except ConfigError as exc:
        sys.stderr.write(f"relup: {exc}\n")
        return EXIT_INVALID
    if args.command == "validate":
        if not args.quiet:
            sys.stderr.write(f"{args.config}: ok\n")
        return EXIT_OK
    if args.command == "curve" and not study.is_curve:
        sys.stderr.write("relup: invalid config:\n  curve: section missing\n")
        return EXIT_INVALID
    return _emit(run_study(study), args.out or study.output, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
