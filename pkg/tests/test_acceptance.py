"""Acceptance criteria for the three worked examples and the property suites.

Each test records one PASS/FAIL line (listed again at the end of the run)
and then asserts it.
"""
import math

import numpy as np
import pytest
from scipy import stats

from relup import fatigue
from relup.benchmarks import EXAMPLE_APIS, example3_curve, example_problem, run_example
from relup.equivalent import UserValue, augment, equivalent_lsf
from relup.kernels import norm_cdf
from relup.likelihood import additive_error_likelihood, likelihood_from_equality_lsf
from relup.limit_state import Leaf
from relup.probability import Normal, ProbabilisticModel
from relup.solvers import ApisOptions, apis, beta_from_p, quadrature
from relup.solvers.quadrature import QuadratureOptions
from relup.updating import SolverSpec, exact_conditional_1d, update_reliability

pytestmark = pytest.mark.slow

SEEDS = range(10)


@pytest.fixture(scope="module")
def curve_mc():
    return example3_curve(SolverSpec("mc", n=1_000_000, seed=1))


def test_1_example1_prior(ex1, criterion):
    p = ex1.model.marginal("r").cdf(2.0)
    beta = beta_from_p(p)
    assert criterion("1", abs(beta - 2.41) <= 0.01, f"p = {p:.5f}, beta = {beta:.4f} (target 2.41 +- 0.01)")


def test_2_example1_exact(ex1, criterion):
    p = exact_conditional_1d(ex1.model.marginal("r"), ex1.likelihoods[0], 2.0)
    beta = beta_from_p(p)
    assert criterion("2", abs(beta - 4.49) <= 0.01, f"beta = {beta:.4f} (target 4.49 +- 0.01)")


def test_3_example1_quadrature(ex1, criterion):
    oracle = beta_from_p(exact_conditional_1d(ex1.model.marginal("r"), ex1.likelihoods[0], 2.0))
    prob = augment(ex1.model, ex1.event, ex1.likelihoods, ex1.strategy)
    res = update_reliability(prob, SolverSpec("quadrature", quadrature=QuadratureOptions(epsrel=1e-11)))
    d = abs(res.beta_conditional - oracle)
    assert criterion("3", d <= 0.02, f"2-D quadrature beta = {res.beta_conditional:.6f}, oracle {oracle:.6f}, "
                                     f"|d| = {d:.1e} (tol 0.02)")


def test_4_example1_apis(criterion):
    betas = [run_example(1, "apis", seed=s).conditional["beta_conditional"] for s in SEEDS]
    lo, hi = min(betas), max(betas)
    ok = 4.40 <= lo and hi <= 4.60 and lo <= 4.53 and hi >= 4.47
    assert criterion("4", ok, f"10 seeds, beta in [{lo:.4f}, {hi:.4f}] (band [4.40, 4.60], must meet [4.47, 4.53])")


def test_5_example1_form_sorm(criterion):
    f = run_example(1, "form").conditional["beta_conditional"]
    s = run_example(1, "sorm").conditional["beta_conditional"]
    ok = 4.59 <= f <= 4.79 and 4.50 <= s <= 4.70
    assert criterion("5", ok, f"FORM {f:.4f} in [4.59, 4.79], SORM {s:.4f} in [4.50, 4.70]")


def test_6_example2_oracle(ex2, criterion):
    beta = ex2.conditional_beta
    assert criterion("6", abs(beta - 3.07) <= 0.01, f"beta = {beta:.4f} (target 3.07 +- 0.01)")


def test_7_example2_apis(criterion):
    reps = [run_example(2, "apis", seed=s) for s in SEEDS]
    betas = [r.conditional["beta_conditional"] for r in reps]
    evals = [r.conditional["n_evals"] for r in reps]
    ok = 2.90 <= min(betas) and max(betas) <= 3.20 and 5_000 <= min(evals) and max(evals) <= 15_000
    assert criterion("7", ok, f"10 seeds, beta in [{min(betas):.4f}, {max(betas):.4f}] (band [2.90, 3.20]); "
                              f"calls per run {min(evals)}..{max(evals)} (1e4 +- 50%)")


def test_8_example2_form_sorm(criterion):
    f = run_example(2, "form").conditional["beta_conditional"]
    s = run_example(2, "sorm").conditional["beta_conditional"]
    ok = abs(f - 3.51) <= 0.15 and abs(s - 2.95) <= 0.20
    assert criterion("8", ok, f"FORM {f:.4f} (3.51 +- 0.15), SORM {s:.4f} (2.95 +- 0.20)")


def test_9a_interval_width(curve_mc, criterion):
    """Honestly unattainable at one grid point, see the decision log.

    Right after the second measurement (n = 2e6) a crack measured at 3 mm
    must have reached 50 mm; the conditional probability is far below
    what 1e6 samples resolve, so no numerator sample hits and the upper
    end of the beta interval is infinite.
    """
    bad = []
    for p in curve_mc:
        if p.diagnostics["den_hits"] >= 1_000:
            half = 0.5 * (p.ci_high - p.ci_low)
            if not half <= 0.1:
                bad.append(f"n={p.n:g} half-width {half:.3g} "
                           f"({p.diagnostics['num_hits']}/{p.diagnostics['den_hits']} hits)")
    checked = sum(p.diagnostics["den_hits"] >= 1_000 for p in curve_mc)
    detail = f"{checked} grid points checked, {len(bad)} above 0.1" + (": " + "; ".join(bad) if bad else "")
    assert criterion("9a", not bad, detail)


def test_9b_nonincreasing(curve_mc, criterion):
    worst = 0.0
    for prev, cur in zip(curve_mc, curve_mc[1:]):
        if prev.measurements == cur.measurements:
            worst = max(worst, cur.beta_conditional - prev.beta_conditional)
    ok = worst <= 0.0
    assert criterion("9b", ok, f"largest increase between measurements {worst:.3g}")


def test_9c_mc_vs_apis(curve_mc, criterion):
    grid = (3e6, 4e6, 5e6)
    ap = example3_curve(SolverSpec("apis", seed=0, apis=EXAMPLE_APIS[3]), grid)
    mc = {p.n: p for p in curve_mc}
    lines, ok = [], True
    for a in ap:
        m = mc[a.n]
        sd = math.hypot((m.ci_high - m.ci_low) / (2 * 1.96), (a.ci_high - a.ci_low) / (2 * 1.96))
        z = abs(a.beta_conditional - m.beta_conditional) / sd
        ok &= z <= 3.0
        lines.append(f"n={a.n:g}: MC {m.beta_conditional:.3f} APIS {a.beta_conditional:.3f} ({z:.1f} sd)")
    assert criterion("9c", ok, "; ".join(lines))


def test_9d_closed_form_vs_ode(criterion):
    x = fatigue.crack_growth_model().sample(21, 100)
    worst, count, runaway = 0.0, 0, 0
    for i in range(100):
        for n in (3e5, 2e6):
            p = fatigue.CrackGrowthParams(a0=float(x["a0"][i]), dS=float(x["dS"][i]), lnC=float(x["lnC"][i]),
                                          m=float(x["m"][i]), n=n)
            a, b = fatigue.crack_size(p), fatigue.crack_size_ode(p)
            if math.isinf(a) or math.isinf(b):
                runaway += 1
                worst = max(worst, 0.0 if math.isinf(a) and math.isinf(b) else math.inf)
                continue
            worst = max(worst, abs(a - b) / abs(b))
            count += 1
    assert criterion("9d", worst <= 1e-5, f"{count} finite cases and {runaway} runaway cases, max relative difference {worst:.2e} (tol 1e-5)")


def test_10_properties(ex1, ex2, rng, criterion):
    checks = {}
    # identity: Pr_u[h_e <= 0] = c L(x)
    L = ex1.likelihoods[0]
    h = equivalent_lsf(L, 1.0, "U")
    r = rng.uniform(0.0, 15.0, 1000)
    got = norm_cdf(-np.asarray(h.evaluate({"r": r, "U": np.zeros_like(r)})))
    checks["identity 1e-10"] = float(np.max(np.abs(got - L.eval({"r": r})))) <= 1e-10
    # c invariance of the quadrature conditional
    quad = SolverSpec("quadrature", quadrature=QuadratureOptions(epsrel=1e-11))
    ps = [update_reliability(augment(ex1.model, ex1.event, ex1.likelihoods, UserValue(c)), quad).p_conditional
          for c in (0.5, 1.0, 2.0)]
    checks["c-invariance 1e-6"] = (max(ps) - min(ps)) / max(ps) <= 1e-6
    # zero-variance APIS on a linear limit state
    plane = ProbabilisticModel(variables=(("a", Normal(0, 1)), ("b", Normal(0, 1)), ("c", Normal(0, 1))))
    lin = Leaf(lambda e: 2.7 - (e["a"] + 2 * e["b"] - 2 * e["c"]) / 3.0, ("a", "b", "c"))
    res = apis(plane, lin, ApisOptions(n_ls=100), seed=0)
    # exact up to root finding and the finite-difference design direction
    exact = stats.norm.cdf(-2.7)
    checks["zero-variance APIS 1e-9"] = abs(res.p - exact) <= 1e-9 * exact and res.stderr <= 1e-9 * exact
    # transform round trip
    worst = 0.0
    for model in (ex1.model, ex2.model, fatigue.crack_growth_model()):
        u = np.clip(rng.normal(size=(1000, model.dim)), -7, 7)
        back = model.to_standard(model.from_standard(u))
        worst = max(worst, float(np.max(np.abs(back - u))))
    checks["round trip 1e-8"] = worst <= 1e-8
    # cross-construction of the likelihood
    add = additive_error_likelihood(lambda e: e["r"], 6.0, Normal(0, 1), ("r",))
    eq = likelihood_from_equality_lsf(lambda e, t: e["r"] - 6.0 + t, Normal(0, 1), (-15.0, 15.0), ("r",))
    rr = rng.uniform(0.0, 12.0, 1000)
    checks["cross-construction 1e-8"] = float(np.max(np.abs(eq.eval({"r": rr}) - add.eval({"r": rr})))) <= 1e-8
    # numerator within denominator on every Monte Carlo run
    nested = True
    for prob in (ex1, ex2):
        for seed in range(3):
            res = update_reliability(augment(prob.model, prob.event, prob.likelihoods, prob.strategy),
                                     SolverSpec("mc", n=100_000, seed=seed))
            nested &= res.diagnostics["num_hits"] <= res.diagnostics["den_hits"]
    for p in example3_curve(SolverSpec("mc", n=50_000, seed=4)):
        nested &= p.diagnostics["num_hits"] <= p.diagnostics["den_hits"]
    checks["nesting"] = nested
    failed = [k for k, v in checks.items() if not v]
    assert criterion("10", not failed, ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()))
