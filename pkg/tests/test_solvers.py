import math

import numpy as np
import pytest
from scipy import stats

from relup.limit_state import Intersection, Leaf
from relup.probability import Normal, ProbabilisticModel
from relup.solvers import (ApisOptions, FormOptions, QuadratureOptions, SolverError, apis, form, line_search,
                           monte_carlo, monte_carlo_counts, quadrature, sorm, thread_count)


@pytest.fixture
def plane():
    return ProbabilisticModel(variables=(("x1", Normal(0.0, 1.0)), ("x2", Normal(0.0, 1.0))))


def linear(beta):
    return Leaf(lambda e: beta - (e["x1"] + e["x2"]) / math.sqrt(2.0), ("x1", "x2"), "linear")


def parabola(beta, kappa):
    return Leaf(lambda e: beta - e["x1"] + 0.5 * kappa * e["x2"] ** 2, ("x1", "x2"), "parabola")


class CountingLeaf(Leaf):
    def __init__(self, inner):
        box = [0]

        def f(env):
            out = np.asarray(inner.func(env), float)
            box[0] += out.size
            return out

        super().__init__(f, inner.names, inner.label)
        object.__setattr__(self, "box", box)


class TestMonteCarlo:
    def test_linear_beta_two(self):
        m = ProbabilisticModel(variables=(("x", Normal(0.0, 1.0)),))
        res = monte_carlo(m, Leaf(lambda e: 2.0 - e["x"], ("x",)), 1_000_000, seed=5)
        assert abs(res.p - stats.norm.cdf(-2.0)) <= 4 * res.stderr
        assert res.n_evals == 1_000_000

    def test_always_failing(self, plane):
        res = monte_carlo(plane, Leaf(lambda e: -1.0 + 0 * e["x1"], ("x1",)), 1000, seed=0)
        assert res.p == 1.0
        assert res.beta == -math.inf

    def test_never_failing(self, plane):
        res = monte_carlo(plane, Leaf(lambda e: 1.0 + 0 * e["x1"], ("x1",)), 1000, seed=0)
        assert res.p == 0.0 and res.beta == math.inf

    def test_reproducible(self, plane):
        a = monte_carlo(plane, linear(1.0), 50_000, seed=9)
        b = monte_carlo(plane, linear(1.0), 50_000, seed=9)
        c = monte_carlo(plane, linear(1.0), 50_000, seed=10)
        assert a.p == b.p != c.p

    def test_thread_count_does_not_change_counts(self, plane, monkeypatch):
        exprs = [linear(1.0), parabola(1.5, 0.3)]
        combos = [(0,), (1,), (0, 1), ()]
        out = {}
        for threads in ("1", "4"):
            monkeypatch.setenv("RELUP_THREADS", threads)
            assert thread_count() == int(threads)
            out[threads] = monte_carlo_counts(plane, exprs, combos, 700_000, seed=2)
        assert np.array_equal(out["1"], out["4"])
        assert out["1"][3] == 700_000

    def test_thread_env_fallback(self, monkeypatch):
        monkeypatch.setenv("RELUP_THREADS", "lots")
        assert thread_count() >= 1

    def test_small_n_rejected(self, plane):
        with pytest.raises(ValueError):
            monte_carlo(plane, linear(1.0), 10, seed=0)


class TestForm:
    def test_linear_exact(self, plane):
        res = form(plane, linear(3.0))
        assert res.beta == pytest.approx(3.0, abs=1e-6)
        assert np.allclose(res.diagnostics["alpha"], [1 / math.sqrt(2)] * 2, atol=1e-6)

    def test_origin_failing_gives_negative_beta(self, plane):
        assert form(plane, linear(-1.0)).beta == pytest.approx(-1.0, abs=1e-6)

    def test_collinear_intersection(self, plane):
        g = linear(3.0)
        res = form(plane, Intersection((g, g)))
        assert res.beta == pytest.approx(3.0, abs=1e-6)

    def test_example_1_prior(self, ex1):
        res = form(ex1.model, ex1.event)
        assert res.beta == pytest.approx(ex1.prior_beta, abs=1e-6)

    def test_evaluation_count(self, plane):
        g = CountingLeaf(linear(3.0))
        res = form(plane, g)
        assert res.n_evals == g.box[0] > 0

    def test_not_converged(self, plane):
        res = form(plane, Leaf(lambda e: 1.0 + 0 * e["x1"], ("x1", "x2")), FormOptions(max_iter=5))
        assert not res.converged


class TestSorm:
    def test_linear_equals_form(self, plane):
        f = form(plane, linear(2.5))
        s = sorm(plane, linear(2.5), f)
        assert s.p == pytest.approx(f.p, rel=1e-6)

    @pytest.mark.parametrize("kappa", [0.1, 0.4])
    def test_parabola_breitung(self, plane, kappa):
        g = parabola(2.5, kappa)
        s = sorm(plane, g, form(plane, g))
        assert s.diagnostics["curvatures"][0] == pytest.approx(kappa, rel=1e-5)
        assert s.p == pytest.approx(stats.norm.cdf(-2.5) / math.sqrt(1 + 2.5 * kappa), rel=1e-6)


class TestLineSearch:
    def test_linear(self):
        assert line_search(lambda t: 2.5 - t) == pytest.approx(2.5, abs=1e-6)

    def test_nearest_safe_to_fail_transition(self):
        assert line_search(lambda t: 4.0 - t * t) == pytest.approx(2.0, abs=1e-6)

    def test_no_crossing(self):
        assert line_search(lambda t: 1.0) is None
        assert line_search(lambda t: -1.0) is None


class TestApis:
    def test_linear_zero_variance(self, plane):
        res = apis(plane, linear(3.0), ApisOptions(n_ls=50), seed=0)
        assert res.p == pytest.approx(stats.norm.cdf(-3.0), rel=1e-9)
        assert res.stderr <= 1e-12

    @pytest.mark.parametrize("spread", [1.0, 1.5])
    def test_spread_does_not_bias(self, plane, spread):
        g = parabola(2.5, 0.4)
        exact = quadrature(plane, g).p
        res = apis(plane, g, ApisOptions(n_ls=2000, sampler_spread=spread), seed=1)
        assert abs(res.p - exact) <= 4 * res.stderr
        assert res.stderr / res.p < 0.05

    def test_surrogate_density(self, plane):
        g = parabola(2.5, 0.4)
        exact = quadrature(plane, g).p
        res = apis(plane, g, ApisOptions(n_ls=1000, density="surrogate"), seed=3)
        assert abs(res.p - exact) <= 4 * res.stderr

    def test_origin_failing_refused(self, plane):
        with pytest.raises(SolverError):
            apis(plane, linear(-1.0))

    def test_seed_reproducible(self, plane):
        g = parabola(2.5, 0.4)
        a = apis(plane, g, ApisOptions(n_ls=200), seed=4)
        b = apis(plane, g, ApisOptions(n_ls=200), seed=4)
        assert a.p == b.p and a.n_evals == b.n_evals

    def test_evaluation_count(self, plane):
        g = CountingLeaf(parabola(2.5, 0.4))
        res = apis(plane, g, ApisOptions(n_ls=100), seed=0)
        assert res.n_evals == g.box[0]


class TestQuadrature:
    def test_linear(self, plane):
        assert quadrature(plane, linear(3.0)).p == pytest.approx(stats.norm.cdf(-3.0), rel=1e-9)

    def test_one_dimensional(self, ex1):
        res = quadrature(ex1.model, ex1.event)
        assert res.beta == pytest.approx(ex1.prior_beta, abs=1e-9)

    def test_parabola_against_integral(self, plane):
        from scipy import integrate
        beta, kappa = 2.5, 0.4
        exact = integrate.quad(lambda v: stats.norm.pdf(v) * stats.norm.sf(beta + 0.5 * kappa * v * v),
                               -np.inf, np.inf, epsabs=0, epsrel=1e-12)[0]
        assert quadrature(plane, parabola(beta, kappa)).p == pytest.approx(exact, rel=1e-8)

    def test_dimension_limit(self):
        m = ProbabilisticModel(variables=tuple((f"x{i}", Normal(0, 1)) for i in range(4)))
        with pytest.raises(ValueError):
            quadrature(m, Leaf(lambda e: 1.0 - e["x0"], ("x0",)))

    def test_options_validated(self):
        with pytest.raises(ValueError):
            QuadratureOptions(nodes=1)
