import os
import subprocess
import sys

import numpy as np
import pytest

from relup import _kernels_py, kernels

compiled = pytest.importorskip("relup._kernels")


@pytest.fixture
def data():
    rng = np.random.default_rng(7)
    n = 5000
    return {
        "x": np.concatenate([rng.normal(0, 4, n), [-40.0, -38.0, 0.0, 38.0, np.inf, -np.inf]]),
        "p": np.concatenate([rng.random(n), 10.0 ** rng.uniform(-300, -1, n), [0.0, 1.0, 0.5]]),
        "crack": [rng.exponential(1, n), rng.normal(60, 10, n), rng.normal(-33, 0.47, n), rng.normal(3.5, 0.3, n)],
    }


class TestBackendParity:
    # libm and scipy differ by a few ulp in the tail and on subnormal results
    def test_norm_cdf(self, data):
        assert np.allclose(compiled.norm_cdf(data["x"]), _kernels_py.norm_cdf(data["x"]), rtol=1e-13, atol=1e-300)

    def test_norm_pdf(self, data):
        assert np.allclose(compiled.norm_pdf(data["x"]), _kernels_py.norm_pdf(data["x"]), rtol=1e-13, atol=1e-300)

    def test_norm_ppf(self, data):
        a, b = compiled.norm_ppf(data["p"]), _kernels_py.norm_ppf(data["p"])
        assert np.array_equal(np.isinf(a), np.isinf(b))
        f = np.isfinite(a)
        assert np.allclose(a[f], b[f], rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("n", [0.0, 3e5, 2e6, 5e6])
    def test_crack_size(self, data, n):
        a, b = compiled.crack_size(*data["crack"], n), _kernels_py.crack_size(*data["crack"], n)
        assert np.array_equal(np.isinf(a), np.isinf(b))
        f = np.isfinite(a)
        # rounding differences are amplified near the runaway pole
        assert np.allclose(a[f], b[f], rtol=1e-8, atol=0)

    def test_equivalent_lsf_counters(self):
        u = np.zeros(5)
        cl = np.array([0.0, 1e-310, 0.5, 1.0, 1.2])
        ha, fa, oa = compiled.equivalent_lsf(u, cl, 1e-300, float(np.nextafter(1.0, 0.0)))
        hb, fb, ob = _kernels_py.equivalent_lsf(u, cl, 1e-300, float(np.nextafter(1.0, 0.0)))
        assert (fa, oa) == (fb, ob) == (2, 1)
        assert np.allclose(ha, hb, rtol=1e-14)
        assert ha[2] == 0.0

    def test_scalar_shapes(self):
        for mod in (compiled, _kernels_py):
            assert np.ndim(mod.norm_cdf(np.float64(0.3))) == 0
            assert np.shape(mod.norm_ppf(np.full((2, 3), 0.2))) == (2, 3)


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("RELUP_PURE_PYTHON", None)
    else:
        env["RELUP_PURE_PYTHON"] = env_value
    out = subprocess.run([sys.executable, "-c", "import relup.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


class TestSelection:
    def test_compiled_by_default(self):
        assert _backend_in_subprocess(None) == "compiled"

    def test_pure_python_override(self):
        assert _backend_in_subprocess("1") == "python"

    def test_current_backend(self):
        expected = "python" if os.environ.get("RELUP_PURE_PYTHON", "").lower() in ("1", "true", "yes") \
            else "compiled"
        assert kernels.BACKEND == expected

    def test_pure_python_end_to_end(self):
        code = ("from relup.benchmarks import run_example; r = run_example(1, 'form'); "
                "print(r.passed, r.conditional['beta_conditional'])")
        env = dict(os.environ, RELUP_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        ok, beta = out.stdout.split()
        assert ok == "True"
        assert float(beta) == pytest.approx(4.69, abs=0.01)
