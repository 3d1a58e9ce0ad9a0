"""Conditional failure probabilities Pr(E | Z) as a ratio of two reliability problems.

Numerator domain: event and every observation domain.  Denominator:
the observation domains alone.  Both live in the augmented space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import integrate

from .equivalent import AugmentedProblem
from .likelihood import Likelihood
from .probability import Marginal
from .solvers._common import (ApisOptions, FormOptions, ReliabilityResult, SolverError, _plain,
                              beta_from_p)
from .solvers.apis import apis
from .solvers.form import form, sorm
from .solvers.montecarlo import monte_carlo_counts
from .solvers.quadrature import QuadratureOptions, quadrature

__all__ = [
    "SolverSpec", "ConditionalResult", "ZeroDenominatorError", "update_reliability", "conditional_ci",
    "exact_conditional_1d", "exact_conditional_linear_gaussian", "METHODS",
]

METHODS = ("mc", "apis", "form", "sorm", "quadrature")
Z95 = 1.959963984540054
ZERO_DENOMINATOR = ("observation probability indistinguishable from zero; "
                    "increase samples or use importance sampling")


class ZeroDenominatorError(SolverError):
    pass


@dataclass(frozen=True)
class SolverSpec:
    method: str = "mc"
    n: int = 1_000_000
    seed: int = 0
    apis: ApisOptions = field(default_factory=ApisOptions)
    form: FormOptions = field(default_factory=FormOptions)
    quadrature: QuadratureOptions = field(default_factory=QuadratureOptions)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown solver {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.method == "mc" and self.n < 100:
            raise ValueError("Monte Carlo needs n >= 100")


@dataclass
class ConditionalResult:
    p_conditional: float
    beta_conditional: float
    p_numerator: float
    p_denominator: float
    interval: tuple[float, float] | None
    solver_used: str
    clamped: bool = False
    n_evals: int = 0
    numerator: ReliabilityResult | None = None
    denominator: ReliabilityResult | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def beta_interval(self) -> tuple[float, float] | None:
        if self.interval is None:
            return None
        lo, hi = self.interval
        return beta_from_p(hi), beta_from_p(lo)

    def to_dict(self) -> dict:
        return _plain({
            "solver": self.solver_used,
            "p_conditional": self.p_conditional, "beta_conditional": self.beta_conditional,
            "p_numerator": self.p_numerator, "p_denominator": self.p_denominator,
            "interval": list(self.interval) if self.interval else None,
            "beta_interval": list(self.beta_interval) if self.interval else None,
            "clamped": self.clamped, "n_evals": self.n_evals,
            "numerator": self.numerator.to_dict() if self.numerator else None,
            "denominator": self.denominator.to_dict() if self.denominator else None,
            "diagnostics": self.diagnostics,
        })


def conditional_ci(num_hits: int, denom_hits: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for num_hits successes in denom_hits trials."""
    if denom_hits < 1:
        raise ZeroDenominatorError(ZERO_DENOMINATOR)
    if not 0 <= num_hits <= denom_hits:
        raise ValueError("need 0 <= num_hits <= denom_hits")
    n = float(denom_hits)
    p = num_hits / n
    z2 = z * z
    centre = (p + z2 / (2 * n)) / (1 + z2 / n)
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    lo = 0.0 if num_hits == 0 else max(0.0, centre - half)
    hi = 1.0 if num_hits == denom_hits else min(1.0, centre + half)
    return lo, hi


def _mc(problem: AugmentedProblem, spec: SolverSpec) -> ConditionalResult:
    exprs = [problem.event, *problem.observation_lsfs]
    obs = tuple(range(1, len(exprs)))
    num_hits, den_hits = (int(v) for v in
                          monte_carlo_counts(problem.model, exprs, [(0,) + obs, obs], spec.n, spec.seed))
    problem.check_bound_violations()
    if num_hits > den_hits:
        raise AssertionError("numerator hits exceed denominator hits under common samples")
    n = spec.n
    diag = {"n": n, "seed": spec.seed, "num_hits": num_hits, "den_hits": den_hits,
            "clamp_stats": problem.clamp_stats()}
    if den_hits == 0:
        raise ZeroDenominatorError(ZERO_DENOMINATOR, diag)
    p = num_hits / den_hits
    num = ReliabilityResult("mc", num_hits / n, beta_from_p(num_hits / n), n,
                            math.sqrt(num_hits / n * (1 - num_hits / n) / n), True, {"hits": num_hits})
    den = ReliabilityResult("mc", den_hits / n, beta_from_p(den_hits / n), n,
                            math.sqrt(den_hits / n * (1 - den_hits / n) / n), True, {"hits": den_hits})
    return ConditionalResult(p, beta_from_p(p), num.p, den.p, conditional_ci(num_hits, den_hits), "mc",
                             False, n, num, den, diag)


def _solve(model, expr, spec: SolverSpec) -> ReliabilityResult:
    if spec.method == "quadrature":
        return quadrature(model, expr, spec.quadrature)
    f = form(model, expr, spec.form)
    if not f.converged:
        raise SolverError("FORM design point search did not converge", f.to_dict())
    if spec.method == "form":
        return f
    if spec.method == "sorm":
        s = sorm(model, expr, f)
        if not s.converged:
            raise SolverError(s.diagnostics.get("message", "SORM failed"), s.to_dict())
        return s
    return apis(model, expr, spec.apis, spec.seed, f)


def update_reliability(problem: AugmentedProblem, spec: SolverSpec | None = None) -> ConditionalResult:
    """Pr(E | Z) with the solver in ``spec``.

    Monte Carlo uses one sample set for numerator and denominator; the
    other methods solve the two problems separately, and a ratio above 1
    is clamped and flagged.
    """
    spec = spec or SolverSpec()
    if spec.method == "mc":
        return _mc(problem, spec)
    num = _solve(problem.model, problem.numerator(), spec)
    den_expr = problem.denominator()
    if den_expr is None:
        den = ReliabilityResult(spec.method, 1.0, -math.inf, 0, 0.0, True, {"kind": "no observations"})
    else:
        den = _solve(problem.model, den_expr, spec)
    problem.check_bound_violations()
    diag: dict = {"clamp_stats": problem.clamp_stats()}
    if not den.p > 0:
        raise ZeroDenominatorError(ZERO_DENOMINATOR, {"numerator": num.to_dict(), "denominator": den.to_dict()})
    ratio = num.p / den.p
    clamped = ratio > 1.0
    p = min(ratio, 1.0)
    if clamped:
        diag["unclamped_ratio"] = ratio
    interval = None
    if spec.method == "apis" and num.p > 0:
        # delta method on log p: CoV^2 of a ratio of independent estimates
        s = math.sqrt((num.cov or 0.0) ** 2 + ((den.cov or 0.0) ** 2 if den_expr is not None else 0.0))
        interval = (p * math.exp(-Z95 * s), min(1.0, p * math.exp(Z95 * s)))
        diag["log_sd"] = s
    return ConditionalResult(p, beta_from_p(p), num.p, den.p, interval, spec.method, clamped,
                             num.n_evals + den.n_evals, num, den, diag)


def exact_conditional_1d(prior: Marginal, L: Likelihood, failure_threshold: float,
                         name: str | None = None, epsrel: float = 1e-10) -> float:
    """Pr[R <= threshold | Z] = int_{r <= s} f(r) L(r) dr / int f(r) L(r) dr.

    Integrated over the standard normal image z of R, where f(r) dr = phi(z) dz.
    """
    if name is None:
        if len(L.names) != 1:
            raise ValueError("likelihood must read exactly one variable")
        name = L.names[0]
    z_s = float(np.clip(prior.to_standard(failure_threshold), -12.0, 12.0)) \
        if np.isfinite(failure_threshold) else 12.0

    def f(z):
        return math.exp(-0.5 * z * z) * float(L.eval({name: prior.from_standard(z)}))

    kw = dict(epsabs=0.0, epsrel=epsrel, limit=500)
    num, _ = integrate.quad(f, -12.0, z_s, **kw)
    rest, _ = integrate.quad(f, z_s, 12.0, **kw)
    den = num + rest
    if not (np.isfinite(den) and den > 0):
        raise ValueError("likelihood integral is zero or not finite")
    return num / den


def exact_conditional_linear_gaussian(a, mean, cov, obs: Sequence[tuple], b: float = 0.0) -> float:
    """Reliability index of g = b + a.X given observations h.X + offset + eps = 0.

    X ~ N(mean, cov); each observation is (h, offset, noise_std) with an
    independent Normal noise eps.  Returns E[g | Z] / sd(g | Z).
    """
    a = np.asarray(a, float)
    mu = np.asarray(mean, float) * np.ones_like(a)
    S = np.asarray(cov, float)
    if obs:
        H = np.array([np.asarray(h, float) for h, _, _ in obs])
        off = np.array([float(o) for _, o, _ in obs])
        noise = np.array([float(s) for _, _, s in obs])
        V = H @ S @ H.T + np.diag(noise ** 2)
        try:
            cho = np.linalg.cholesky(V)
        except np.linalg.LinAlgError:
            raise ValueError("observation covariance is singular") from None
        K = np.linalg.solve(cho.T, np.linalg.solve(cho, H @ S)).T
        mu = mu + K @ (-off - H @ mu)
        S = S - K @ H @ S
    var = float(a @ S @ a)
    if not var > 0:
        raise ValueError("conditioned variance of the limit state is not positive")
    return (b + float(a @ mu)) / math.sqrt(var)
