import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from relup.probability import (Deterministic, DomainError, Exponential, Lognormal, Normal,
                               ProbabilisticModel, Weibull, from_standard_normal, sample,
                               std_normal_cdf, std_normal_pdf, std_normal_quantile, to_standard_normal)

MARGINALS = [Normal(60.0, 10.0), Lognormal(0.3, 0.5), Weibull(3.0, 10.0), Exponential(1.0), Normal(-33.0, 0.47)]


def erf_series(x, terms=80):
    # Maclaurin series of erf; exact enough for |x| <= 3 in double precision
    s, term = 0.0, x
    for k in range(terms):
        s += term / (2 * k + 1)
        term *= -x * x / (k + 1)
    return 2.0 / math.sqrt(math.pi) * s


class TestStdNormal:
    def test_symmetry_point(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_quantile(0.5) == 0.0

    def test_cdf_at_one_matches_series(self):
        oracle = 0.5 * (1.0 + erf_series(1.0 / math.sqrt(2.0)))
        assert abs(std_normal_cdf(1.0) - oracle) <= 1e-12

    @pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
    def test_cdf_against_scipy(self, x):
        assert abs(std_normal_cdf(x) - stats.norm.cdf(x)) <= 1e-12

    def test_weibull_prior_index(self):
        assert std_normal_cdf(-2.41) == pytest.approx(0.00798, abs=5e-5)
        assert std_normal_quantile(0.008) == pytest.approx(-2.41, abs=0.005)

    def test_infinite_arguments(self):
        assert std_normal_cdf(-np.inf) == 0.0
        assert std_normal_cdf(np.inf) == 1.0
        assert std_normal_quantile(0.0) == -np.inf
        assert std_normal_quantile(1.0) == np.inf

    @pytest.mark.parametrize("p", [-0.1, 1.5, 2.0])
    def test_quantile_domain(self, p):
        with pytest.raises(DomainError):
            std_normal_quantile(p)

    @pytest.mark.parametrize("x", range(-5, 6))
    def test_round_trip(self, x):
        assert std_normal_quantile(std_normal_cdf(float(x))) == pytest.approx(x, abs=1e-10)

    def test_far_tail(self):
        for p in [1e-300, 1e-200, 1e-100, 1e-20, 1e-10]:
            x = std_normal_quantile(p)
            assert std_normal_cdf(x) == pytest.approx(p, rel=1e-10)
        upper = 1 - 1e-16
        assert std_normal_cdf(std_normal_quantile(upper)) == pytest.approx(upper, abs=1e-10)

    def test_pdf(self):
        assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


class TestMarginals:
    def test_weibull_cdf(self):
        assert Weibull(3.0, 10.0).cdf(2.0) == pytest.approx(1 - math.exp(-0.008), rel=1e-12)

    def test_exponential_cdf(self):
        assert Exponential(1.0).cdf(1.0) == pytest.approx(1 - math.exp(-1), rel=1e-12)

    def test_normal_median(self):
        assert Normal(60.0, 10.0).cdf(60.0) == 0.5

    @pytest.mark.parametrize("m", MARGINALS, ids=lambda m: type(m).__name__)
    def test_pdf_is_derivative_of_cdf(self, m):
        x = np.asarray(m.quantile(np.linspace(0.05, 0.95, 19)))
        h = 1e-5 * (1 + np.abs(x))
        num = (np.asarray(m.cdf(x + h)) - np.asarray(m.cdf(x - h))) / (2 * h)
        assert np.allclose(num, m.pdf(x), atol=1e-6)

    @pytest.mark.parametrize("m", MARGINALS, ids=lambda m: type(m).__name__)
    def test_cdf_quantile_property(self, m, rng):
        p = 10 ** rng.uniform(-10, 0, 1000)
        p = np.where(rng.random(1000) < 0.5, p, 1 - p)
        p = np.clip(p, 1e-10, 1 - 1e-10)
        assert np.max(np.abs(np.asarray(m.cdf(m.quantile(p))) - p)) <= 1e-9

    @pytest.mark.parametrize("m", MARGINALS, ids=lambda m: type(m).__name__)
    def test_quantile_inverts_cdf(self, m):
        x = np.asarray(m.quantile(np.linspace(0.01, 0.99, 25)))
        assert np.allclose(m.quantile(m.cdf(x)), x, rtol=1e-10, atol=1e-12)

    def test_out_of_support(self):
        w = Weibull(3.0, 10.0)
        assert w.cdf(-1.0) == 0.0
        assert w.pdf(-1.0) == 0.0
        assert Exponential(2.0).cdf(-5.0) == 0.0

    @pytest.mark.parametrize("ctor", [lambda: Weibull(0.0, 1.0), lambda: Weibull(2.0, -1.0),
                                      lambda: Normal(0.0, 0.0), lambda: Exponential(-1.0),
                                      lambda: Lognormal(0.0, -0.1)])
    def test_invalid_parameters(self, ctor):
        with pytest.raises(ValueError):
            ctor()


@pytest.fixture
def crack_model():
    return ProbabilisticModel(
        variables=(("a0", Exponential(1.0)), ("ac", Deterministic(50.0)), ("dS", Normal(60.0, 10.0)),
                   ("lnC", Normal(-33.0, 0.47)), ("m", Normal(3.5, 0.3))),
        correlations=(("lnC", "m", -0.9),))


class TestModel:
    def test_medians_map_to_origin(self):
        model = ProbabilisticModel(variables=(("r", Weibull(3.0, 10.0)), ("s", Normal(1.0, 2.0))))
        u = to_standard_normal(model, model.medians())
        assert np.allclose(u, 0.0, atol=1e-12)

    def test_weibull_point(self):
        model = ProbabilisticModel(variables=(("r", Weibull(3.0, 10.0)),))
        assert float(model.to_standard({"r": 2.0})[0]) == pytest.approx(-2.41, abs=0.005)

    def test_deterministic_takes_no_dimension(self, crack_model):
        assert crack_model.dim == 4
        assert "ac" not in crack_model.random_names
        x = crack_model.from_standard(np.zeros(4))
        assert float(x["ac"]) == 50.0

    def test_correlated_round_trip(self, crack_model, rng):
        u = rng.standard_normal((1000, 4))
        x = from_standard_normal(crack_model, u)
        back = to_standard_normal(crack_model, x)
        assert np.allclose(back, u, atol=1e-8)
        x2 = from_standard_normal(crack_model, back)
        for k in crack_model.random_names:
            scale = 1 + np.abs(x[k])
            assert np.max(np.abs(x2[k] - x[k]) / scale) <= 1e-8

    def test_sample_correlation(self, crack_model):
        x = crack_model.sample(3, 100_000)
        r = np.corrcoef(x["lnC"], x["m"])[0, 1]
        assert r == pytest.approx(-0.9, abs=0.02)

    def test_exponential_mean_and_std(self, crack_model):
        a0 = crack_model.sample(5, 100_000)["a0"]
        assert a0.mean() == pytest.approx(1.0, abs=0.02)
        assert a0.std() == pytest.approx(1.0, abs=0.02)

    def test_sampling_is_deterministic(self, crack_model):
        a, b = sample(crack_model, 9, 500), sample(crack_model, 9, 500)
        for k in a:
            assert np.array_equal(a[k], b[k])

    def test_sample_index_independence(self, crack_model):
        whole = crack_model.sample_standard(4, 3000)
        tail = crack_model.sample_standard(4, 1000, start=2000)
        assert np.array_equal(whole[2000:], tail)

    def test_transform_matches_direct_quantile_sampling(self):
        w = Weibull(3.0, 10.0)
        model = ProbabilisticModel(variables=(("r", w),))
        via_transform = model.sample(1, 10_000)["r"]
        direct = w.quantile(np.random.default_rng(2).random(10_000))
        res = stats.ks_2samp(via_transform, direct)
        assert res.statistic < 1.628 * math.sqrt(2 / 10_000)

    @pytest.mark.parametrize("bad", [
        dict(variables=(("x", Normal(0, 1)), ("x", Normal(0, 1)))),
        dict(variables=(("x", Normal(0, 1)), ("y", Weibull(2, 1))), correlations=(("x", "y", 0.5),)),
        dict(variables=(("x", Normal(0, 1)), ("y", Normal(0, 1))), correlations=(("x", "y", 1.0),)),
        dict(variables=(("x", Normal(0, 1)),), correlations=(("x", "x", 0.3),)),
    ])
    def test_invalid_models(self, bad):
        with pytest.raises(ValueError):
            ProbabilisticModel(**bad)

    def test_out_of_support_transform(self):
        model = ProbabilisticModel(variables=(("r", Weibull(3.0, 10.0)),))
        with pytest.raises(DomainError):
            model.to_standard({"r": -1.0})


@settings(max_examples=200, deadline=None)
@given(st.floats(-8.0, 8.0))
def test_cdf_monotone_and_bounded(x):
    a, b = std_normal_cdf(x), std_normal_cdf(x + 1e-3)
    assert 0.0 <= a <= b <= 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-300, 1.0 - 1e-16))
def test_quantile_inverse_property(p):
    assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-10 * max(p, 1e-300) + 1e-16
