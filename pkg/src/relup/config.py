"""JSON problem definitions: validation and construction of runnable studies.

A config is checked completely (schema, expression syntax, declared
names) before anything is computed; every problem is reported at once in
a :class:`ConfigError`.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from . import dsl
from .equivalent import EmpiricalMax, FromSupBound, UserValue
from .likelihood import (Likelihood, additive_error_likelihood, likelihood_from_equality_lsf,
                         regularize_equality)
from .limit_state import CutSetSystem, LimitStateExpression
from .probability import (Deterministic, Exponential, Lognormal, Marginal, Normal, ProbabilisticModel,
                          Weibull)
from .results import validate_document
from .solvers._common import ApisOptions, FormOptions
from .solvers.quadrature import QuadratureOptions
from .updating import SolverSpec

__all__ = ["ConfigError", "Study", "load_config", "parse_config", "marginal_from_dict", "build_study"]

DISTRIBUTIONS = {
    "normal": (Normal, ("mean", "std")),
    "lognormal": (Lognormal, ("mean_log", "std_log")),
    "weibull": (Weibull, ("shape", "scale")),
    "exponential": (Exponential, ("mean",)),
    "deterministic": (Deterministic, ("value",)),
}
OPTION_TYPES = {"apis": ApisOptions, "form": FormOptions, "sorm": FormOptions, "quadrature": QuadratureOptions}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


def marginal_from_dict(d: dict) -> Marginal:
    cls, keys = DISTRIBUTIONS[d["dist"]]
    return cls(*(float(d[k]) for k in keys))


@dataclass
class Study:
    """A validated config turned into model, event and likelihoods."""

    config: dict
    model: ProbabilisticModel
    event_node: Any
    likelihoods: list[Likelihood]
    strategy: Any
    solver: SolverSpec
    seed: int
    output: str | None
    curve_parameter: str | None = None
    grid: list[float] | None = None
    schedule: list[tuple[float, Any]] = field(default_factory=list)

    @property
    def is_curve(self) -> bool:
        return self.curve_parameter is not None

    def event(self, at: float | None = None) -> LimitStateExpression:
        bind = {self.curve_parameter: at} if self.is_curve else None
        node = self.event_node
        if isinstance(node, tuple):
            comps, cut_sets = node
            return CutSetSystem(tuple(dsl.compile_leaf(c, bind) for c in comps), cut_sets)
        return dsl.compile_leaf(node, bind)


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror or exc}"]) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc.msg} at line {exc.lineno}, column {exc.colno})"]) \
            from None


def _parse(text, where, problems):
    try:
        return dsl.parse_expression(text)
    except dsl.DslError as exc:
        problems.append(f"{where}: {exc}")
        return None


def _check_names(node, allowed, where, problems):
    if node is None:
        return
    for name in sorted(dsl.free_variables(node) - set(allowed)):
        problems.append(f"{where}: undeclared variable {name!r}")


def _strategy(raw):
    if raw in (None, "auto"):
        return None
    if raw == "sup_bound":
        return FromSupBound()
    if "value" in raw:
        return UserValue(float(raw["value"]))
    emp = raw["empirical"]
    return EmpiricalMax(int(emp.get("samples", 10_000)), float(emp.get("safety", 10.0)), int(emp.get("seed", 0)))


def _solver(raw: dict, seed: int, problems) -> SolverSpec | None:
    method = raw.get("method", "mc")
    opts = dict(raw.get("options", {}))
    kw: dict = {"method": method, "seed": seed}
    try:
        if method == "mc":
            n = opts.pop("n", 1_000_000)
            if opts:
                problems.append(f"solver.options: unknown option(s) for mc: {', '.join(sorted(opts))}")
                return None
            kw["n"] = int(n)
        else:
            cls = OPTION_TYPES[method]
            known = {f.name for f in fields(cls)}
            unknown = set(opts) - known
            if unknown:
                problems.append(f"solver.options: unknown option(s) for {method}: {', '.join(sorted(unknown))}")
                return None
            if "u0" in opts and opts["u0"] is not None:
                opts["u0"] = tuple(opts["u0"])
            kw["form" if method == "sorm" else method] = cls(**opts)
        return SolverSpec(**kw)
    except (TypeError, ValueError) as exc:
        problems.append(f"solver: {exc}")
        return None


def _likelihood(i, ob, names, bind, problems):
    where = f"observations[{i}]"
    kind = ob["type"]
    label = ob.get("label", "")
    if kind == "additive_error":
        node = _parse(ob["prediction"], f"{where}.prediction", problems)
        _check_names(node, names + bind, f"{where}.prediction", problems)
        err = ob.get("error", {"dist": "normal", "mean": 0.0, "std": 1.0})
        if err["dist"] == "deterministic":
            problems.append(f"{where}.error: the error distribution needs a density")
            return None
        if node is None:
            return None
        vars_ = tuple(sorted(dsl.free_variables(node) - set(bind)))
        return lambda at: additive_error_likelihood(
            _bound(node, bind, at), float(ob["measured"]), marginal_from_dict(err), vars_,
            label or f"{ob['prediction']}={ob['measured']}")
    if kind == "equality_lsf":
        noise_name = ob["noise_variable"]
        if noise_name in names:
            problems.append(f"{where}.noise_variable: {noise_name!r} clashes with a model variable")
        node = _parse(ob["h"], f"{where}.h", problems)
        _check_names(node, names + bind + [noise_name], f"{where}.h", problems)
        noise = ob.get("noise", {"dist": "normal", "mean": 0.0, "std": 1.0})
        if noise["dist"] == "deterministic":
            problems.append(f"{where}.noise: the noise distribution needs a density")
        lo, hi = ob["bracket"]
        if not hi > lo:
            problems.append(f"{where}.bracket: must be an increasing interval")
        if node is None:
            return None
        vars_ = tuple(sorted(dsl.free_variables(node) - set(bind) - {noise_name}))

        def make(at):
            fixed = _fixed(bind, at)

            def h(env, t):
                return dsl.evaluate(node, {**env, **fixed, noise_name: t})
            return likelihood_from_equality_lsf(h, marginal_from_dict(noise), (lo, hi), vars_,
                                                int(ob.get("grid", 512)), label=label or ob["h"])
        return make
    # regularized
    node = _parse(ob["h"], f"{where}.h", problems)
    _check_names(node, names + bind, f"{where}.h", problems)
    if node is None:
        return None
    vars_ = tuple(sorted(dsl.free_variables(node) - set(bind)))
    return lambda at: regularize_equality(_bound(node, bind, at), float(ob["sigma"]), vars_, label or ob["h"])


def _fixed(bind, at):
    return {bind[0]: at} if bind and at is not None else {}


def _bound(node, bind, at):
    fixed = _fixed(bind, at)
    return lambda env: dsl.evaluate(node, {**env, **fixed})


def parse_config(cfg: dict, overrides: dict | None = None) -> Study:
    """Validate ``cfg`` and build a :class:`Study`; raises ConfigError.

    ``overrides`` may set seed, n, method and grid (command-line values).
    """
    if not isinstance(cfg, dict):
        raise ConfigError(["<root>: a config must be a JSON object"])
    cfg = copy.deepcopy(cfg)
    overrides = overrides or {}
    if overrides.get("method"):
        cfg.setdefault("solver", {})
        if cfg["solver"].get("method", "mc") != overrides["method"]:
            cfg["solver"] = {"method": overrides["method"], "options": {}}
    if overrides.get("n") is not None:
        solver = cfg.setdefault("solver", {"method": "mc"})
        key = "n_ls" if solver.get("method", "mc") == "apis" else "n"
        solver.setdefault("options", {})[key] = int(overrides["n"])
    if overrides.get("seed") is not None:
        cfg["seed"] = int(overrides["seed"])
    if overrides.get("grid") is not None:
        cfg.setdefault("curve", {"parameter": "n"})["grid"] = [float(v) for v in overrides["grid"]]
    problems = validate_document(cfg, "config")
    if problems:
        raise ConfigError(problems)

    names = [v["name"] for v in cfg["variables"]]
    marginals = []
    for i, v in enumerate(cfg["variables"]):
        if names.count(v["name"]) > 1 and names.index(v["name"]) == i:
            problems.append(f"variables: duplicate name {v['name']!r}")
        if v["name"] in dsl.CONSTANTS or v["name"] in dsl.FUNCTIONS:
            problems.append(f"variables[{i}]: {v['name']!r} is a reserved name")
        try:
            marginals.append((v["name"], marginal_from_dict(v)))
        except (ValueError, KeyError) as exc:
            problems.append(f"variables[{i}]: {exc}")
    curve = cfg.get("curve")
    bind = [curve["parameter"]] if curve else []
    if curve and curve["parameter"] in names:
        problems.append(f"curve.parameter: {curve['parameter']!r} is also a model variable")

    event = cfg["event"]
    if isinstance(event, str):
        node = _parse(event, "event", problems)
        _check_names(node, names + bind, "event", problems)
        event_node = node
    else:
        comps = []
        for j, text in enumerate(event["components"]):
            node = _parse(text, f"event.components[{j}]", problems)
            _check_names(node, names + bind, f"event.components[{j}]", problems)
            comps.append(node)
        cut_sets = tuple(tuple(c) for c in event["cut_sets"])
        for k, c in enumerate(cut_sets):
            for idx in c:
                if not 0 <= idx < len(comps):
                    problems.append(f"event.cut_sets[{k}]: component index {idx} out of range")
        event_node = (tuple(comps), cut_sets)

    makers = []
    for i, ob in enumerate(cfg.get("observations", [])):
        if "at" in ob and not curve:
            problems.append(f"observations[{i}].at: only allowed with a curve section")
        # without "at" the curve parameter is not bound and reads as undeclared
        makers.append((ob.get("at"), _likelihood(i, ob, names, bind if "at" in ob else [], problems)))

    seed = int(cfg.get("seed", 0))
    solver = _solver(cfg.get("solver", {"method": "mc"}), seed, problems)
    strategy = None
    try:
        strategy = _strategy(cfg.get("c_strategy", "auto"))
        if isinstance(strategy, UserValue) and not strategy.c > 0:
            problems.append("c_strategy.value: must be positive")
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"c_strategy: {exc}")
    grid = None
    if curve:
        grid = [float(v) for v in curve["grid"]]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            problems.append("curve.grid: must be strictly increasing")
    model = None
    if not problems:
        try:
            model = ProbabilisticModel(variables=tuple(marginals),
                                       correlations=tuple((c["a"], c["b"], float(c["rho"]))
                                                          for c in cfg.get("correlations", [])))
        except ValueError as exc:
            problems.append(f"correlations: {exc}")
    if problems:
        raise ConfigError(problems)

    if curve:
        schedule = [(float(at) if at is not None else -math.inf, make(float(at) if at is not None else None))
                    for at, make in makers]
        likelihoods = [L for _, L in schedule]
    else:
        schedule = []
        likelihoods = [make(None) for _, make in makers]
    resolved = dict(cfg)
    resolved["seed"] = seed
    return Study(resolved, model, event_node, likelihoods, strategy, solver, seed, cfg.get("output"),
                 curve["parameter"] if curve else None, grid, schedule)


def build_study(path: str | Path, overrides: dict | None = None) -> Study:
    return parse_config(load_config(path), overrides)
