import copy
import json
from pathlib import Path

import numpy as np
import pytest

from relup.config import ConfigError, build_study, load_config, parse_config
from relup.equivalent import EmpiricalMax, FromSupBound, UserValue
from relup.limit_state import CutSetSystem

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "variables": [{"name": "r", "dist": "weibull", "shape": 3, "scale": 10},
                  {"name": "s", "dist": "normal", "mean": 2, "std": 0.5}],
    "event": "r - s",
    "observations": [{"type": "additive_error", "prediction": "r", "measured": 6}],
    "solver": {"method": "mc", "options": {"n": 20000}},
    "seed": 3,
}


def with_(**changes):
    cfg = copy.deepcopy(BASE)
    cfg.update(changes)
    return cfg


def problems(cfg):
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    return info.value.problems


class TestShippedConfigs:
    @pytest.mark.parametrize("name", ["example1", "example2", "example3"])
    def test_valid(self, name):
        study = build_study(CONFIGS / f"{name}.json")
        assert study.model.dim >= 1

    def test_example3_is_a_curve(self):
        study = build_study(CONFIGS / "example3.json")
        assert study.is_curve and len(study.grid) == 20
        assert [at for at, _ in study.schedule] == [3e5, 2e6]


class TestParse:
    def test_basic(self):
        study = parse_config(BASE)
        assert list(study.model.names) == ["r", "s"]
        assert study.solver.n == 20000 and study.seed == 3
        assert study.event().evaluate({"r": 5.0, "s": 1.0}) == 4.0
        L = study.likelihoods[0]
        assert L.eval({"r": 6.0}) == pytest.approx(1 / np.sqrt(2 * np.pi))

    def test_overrides(self):
        study = parse_config(BASE, {"seed": 9, "n": 500, "method": None, "grid": None})
        assert study.seed == 9 and study.solver.n == 500
        study = parse_config(BASE, {"method": "apis", "n": 40})
        assert study.solver.method == "apis" and study.solver.apis.n_ls == 40

    @pytest.mark.parametrize("raw,cls", [("sup_bound", FromSupBound), ({"value": 0.5}, UserValue),
                                         ({"empirical": {"samples": 100}}, EmpiricalMax)])
    def test_strategies(self, raw, cls):
        assert isinstance(parse_config(with_(c_strategy=raw)).strategy, cls)
        assert parse_config(with_(c_strategy="auto")).strategy is None

    def test_cut_sets(self):
        study = parse_config(with_(event={"components": ["r - s", "r - 3"], "cut_sets": [[0, 1]]}))
        assert isinstance(study.event(), CutSetSystem)

    def test_equality_lsf_and_regularized(self):
        obs = [{"type": "equality_lsf", "h": "r - 6 + eps", "noise_variable": "eps", "bracket": [-10, 10]},
               {"type": "regularized", "h": "r + s - 8", "sigma": 0.5}]
        study = parse_config(with_(observations=obs))
        a, b = study.likelihoods
        assert a.eval({"r": 6.0}) == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-8)
        assert b.eval({"r": 6.0, "s": 2.0}) == pytest.approx(1 / (0.5 * np.sqrt(2 * np.pi)))

    def test_correlations(self):
        v = [{"name": "r", "dist": "lognormal", "mean_log": 2, "std_log": 0.1}, BASE["variables"][1]]
        study = parse_config(with_(variables=v, correlations=[{"a": "r", "b": "s", "rho": 0.3}]))
        assert study.model.dim == 2

    def test_correlation_needs_gaussian_image(self):
        out = problems(with_(correlations=[{"a": "r", "b": "s", "rho": 0.3}]))
        assert any(p.startswith("correlations") for p in out)


class TestProblems:
    def test_undeclared_variable_named(self):
        out = problems(with_(event="r - q"))
        assert any("'q'" in p and p.startswith("event") for p in out)

    def test_all_problems_reported(self):
        cfg = with_(event="r - q", observations=[{"type": "additive_error", "prediction": "foo(r)", "measured": 1}])
        out = problems(cfg)
        assert len(out) == 2

    def test_schema_violation(self):
        out = problems(with_(solver={"method": "mc", "options": {"n": 10}, "extra": 1}))
        assert out

    def test_missing_event(self):
        cfg = copy.deepcopy(BASE)
        del cfg["event"]
        assert any("event" in p for p in problems(cfg))

    def test_duplicate_and_reserved_names(self):
        v = BASE["variables"] + [{"name": "r", "dist": "normal", "mean": 0, "std": 1},
                                 {"name": "pi", "dist": "normal", "mean": 0, "std": 1}]
        out = problems(with_(variables=v))
        assert any("duplicate" in p for p in out) and any("reserved" in p for p in out)

    def test_bad_parameter(self):
        v = [{"name": "r", "dist": "normal", "mean": 0, "std": -1}, BASE["variables"][1]]
        assert any("variables[0]" in p for p in problems(with_(variables=v)))

    def test_cut_set_index(self):
        out = problems(with_(event={"components": ["r - s"], "cut_sets": [[0, 2]]}))
        assert any("out of range" in p for p in out)

    def test_at_without_curve(self):
        obs = [{"type": "additive_error", "prediction": "r", "measured": 6, "at": 10}]
        assert any(".at" in p for p in problems(with_(observations=obs)))

    def test_curve_parameter_needs_at(self):
        cfg = with_(event="r - s*n", curve={"parameter": "n", "grid": [1, 2]},
                    observations=[{"type": "additive_error", "prediction": "r*n", "measured": 6}])
        assert any("'n'" in p for p in problems(cfg))

    def test_grid_increasing(self):
        cfg = with_(event="r - s*n", curve={"parameter": "n", "grid": [2, 1]})
        assert any("increasing" in p for p in problems(cfg))

    def test_unknown_solver_option(self):
        out = problems(with_(solver={"method": "apis", "options": {"n_ls": 10, "speed": 2}}))
        assert any("speed" in p for p in out)

    def test_nonpositive_c(self):
        assert problems(with_(c_strategy={"value": 0}))

    def test_deterministic_error(self):
        obs = [{"type": "additive_error", "prediction": "r", "measured": 6,
                "error": {"dist": "deterministic", "value": 0}}]
        assert any("density" in p for p in problems(with_(observations=obs)))

    def test_noise_variable_clash(self):
        obs = [{"type": "equality_lsf", "h": "r - 6 + s", "noise_variable": "s", "bracket": [-1, 1]}]
        assert any("clashes" in p for p in problems(with_(observations=obs)))

    def test_not_an_object(self):
        assert problems([1, 2])


class TestLoad:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\"variables\": [")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(p)

    def test_round_trip(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(BASE))
        assert build_study(p).config["seed"] == 3
