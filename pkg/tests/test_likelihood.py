import math

import numpy as np
import pytest
from scipy import stats

from relup.likelihood import (additive_error_likelihood, constant_likelihood, likelihood_from_equality_lsf,
                              product_likelihood, regularize_equality)
from relup.probability import Deterministic, Normal

PHI0 = 1 / math.sqrt(2 * math.pi)


class TestAdditiveError:
    def test_unit_normal_error(self):
        L = additive_error_likelihood(lambda e: e["r"], 6.0, Normal(0.0, 1.0), ("r",))
        assert L.eval({"r": 6.0}) == pytest.approx(PHI0, rel=1e-14)
        r = np.linspace(0, 12, 25)
        assert np.allclose(L.eval({"r": r}), stats.norm.pdf(6 - r), rtol=1e-12)
        assert L.sup_bound == pytest.approx(PHI0)

    def test_deterministic_error_rejected(self):
        with pytest.raises(ValueError):
            additive_error_likelihood(lambda e: e["r"], 6.0, Deterministic(0.0), ("r",))

    def test_small_noise_concentrates(self):
        L = additive_error_likelihood(lambda e: e["r"], 6.0, Normal(0.0, 0.01), ("r",))
        r = np.linspace(5, 7, 20001)
        w = L.eval({"r": r})
        near = np.abs(r - 6) < 0.05
        assert w[near].sum() / w.sum() > 0.999999


class TestEqualityLsf:
    def test_matches_additive_form(self, rng):
        add = additive_error_likelihood(lambda e: e["r"], 6.0, Normal(0.0, 1.0), ("r",))
        eq = likelihood_from_equality_lsf(lambda e, eps: e["r"] - 6.0 + eps, Normal(0.0, 1.0), (-15, 15), ("r",))
        r = rng.uniform(0, 12, 1000)
        assert np.max(np.abs(eq.eval({"r": r}) - add.eval({"r": r}))) <= 1e-8
        assert abs(eq.eval({"r": 6.3}) - add.eval({"r": 6.3})) <= 1e-9

    def test_two_roots(self):
        L = likelihood_from_equality_lsf(lambda e, t: t * t - e["g"], Normal(0.0, 1.0), (-5.1, 4.9), ("g",))
        assert L.eval({"g": 4.0}) == pytest.approx(2 * stats.norm.pdf(2.0), rel=1e-9)

    def test_no_root(self):
        L = likelihood_from_equality_lsf(lambda e, t: t * t - e["g"], Normal(0.0, 1.0), (-5.1, 4.9), ("g",))
        assert L.eval({"g": -1.0}) == 0.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_rejected(self):
        L = likelihood_from_equality_lsf(lambda e, t: np.log(t) - e["g"], Normal(0.0, 1.0), (-1, 1), ("g",))
        with pytest.raises(ValueError):
            L.eval({"g": 0.0})

    def test_bad_bracket(self):
        with pytest.raises(ValueError):
            likelihood_from_equality_lsf(lambda e, t: t, Normal(0, 1), (1.0, -1.0), ())


class TestProductAndRegularized:
    def test_single_part_is_identity(self):
        L = constant_likelihood(0.3)
        assert product_likelihood([L]) is L

    def test_constants_multiply(self):
        L = product_likelihood([constant_likelihood(0.3), constant_likelihood(0.5)])
        assert L.eval({}) == pytest.approx(0.15)
        assert L.sup_bound == pytest.approx(0.15)

    def test_pair_sum_triple(self, rng):
        names = [f"x{i}" for i in range(1, 5)]
        parts = [additive_error_likelihood(lambda e, a=a, b=b: e[a] + e[b], 20.0, Normal(0, 1), (a, b))
                 for a, b in zip(names, names[1:])]
        L = product_likelihood(parts)
        x = {n: rng.normal(10, 2, 50) for n in names}
        expect = np.prod([stats.norm.pdf(20 - x[a] - x[b]) for a, b in zip(names, names[1:])], axis=0)
        assert np.allclose(L.eval(x), expect, rtol=1e-12)
        assert set(L.names) == set(names)

    def test_empty_product(self):
        with pytest.raises(ValueError):
            product_likelihood([])

    def test_regularized_peak(self):
        L = regularize_equality(lambda e: 0.0 * e["x"], 0.2, ("x",))
        assert L.eval({"x": 1.0}) == pytest.approx(1 / (0.2 * math.sqrt(2 * math.pi)))
        half = regularize_equality(lambda e: 0.0 * e["x"], 0.1, ("x",))
        assert half.eval({"x": 1.0}) == pytest.approx(2 * L.eval({"x": 1.0}))

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_regularized_sigma(self, sigma):
        with pytest.raises(ValueError):
            regularize_equality(lambda e: e["x"], sigma, ("x",))

    def test_nonnegative_everywhere(self, rng):
        x = {"r": rng.normal(0, 20, 10_000)}
        builders = [
            additive_error_likelihood(lambda e: e["r"], 6.0, Normal(0, 1), ("r",)),
            likelihood_from_equality_lsf(lambda e, t: e["r"] ** 2 - 4 + t, Normal(0, 1), (-50, 50), ("r",)),
            regularize_equality(lambda e: e["r"] - 1, 0.5, ("r",)),
        ]
        for L in builders:
            assert np.all(np.asarray(L.eval(x)) >= 0)


class TestRegularizationRefinement:
    """Shrinking the regularization width converges to the exact equality update."""

    def test_cauchy_within_sampling_error(self):
        from scipy import integrate

        from relup import FromSupBound, Leaf, ProbabilisticModel, Weibull, augment, update_reliability
        from relup.updating import SolverSpec

        R, S = Weibull(3.0, 10.0), Normal(5.0, 2.0)
        model = ProbabilisticModel(variables=(("r", R), ("s", S)))
        event = Leaf(lambda e: e["r"] - e["s"], ("r", "s"))
        f = lambda r: R.pdf(r) * S.pdf(14.0 - r)
        num = integrate.quad(f, 0, 7, epsrel=1e-12)[0]
        exact = num / (num + integrate.quad(f, 7, 40, epsrel=1e-12)[0])

        # sigma_obs ~ 4 for r + s; widths 0.1, 0.05, 0.025 of it
        ps, halfs = [], []
        for sigma in (0.4, 0.2, 0.1):
            L = regularize_equality(lambda e: e["r"] + e["s"] - 14.0, sigma, ("r", "s"))
            res = update_reliability(augment(model, event, [L], FromSupBound()),
                                     SolverSpec("mc", n=1_000_000, seed=3))
            ps.append(res.p_conditional)
            halfs.append((res.interval[1] - res.interval[0]) / 2)
        for k in range(2):
            assert abs(ps[k + 1] - ps[k]) <= 1.5 * math.hypot(halfs[k], halfs[k + 1])
        assert abs(ps[-1] - exact) <= 1.5 * halfs[-1]
