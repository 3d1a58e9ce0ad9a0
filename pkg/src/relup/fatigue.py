"""Paris-law fatigue crack growth and its measurement likelihoods.

Units: mm, N/mm^2, cycles.  da/dn = C (dS sqrt(pi a))^m integrates to

    a(n) = [(1 - m/2) C dS^m pi^(m/2) n + a0^(1 - m/2)]^(1 / (1 - m/2)).

For m > 2 the bracket reaches zero at a finite n: the crack runs away and
a(n) is reported as infinite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .likelihood import Likelihood, additive_error_likelihood
from .limit_state import Leaf
from .probability import Deterministic, Exponential, Normal, ProbabilisticModel

__all__ = [
    "FAILED", "CrackGrowthParams", "crack_size", "crack_size_array", "crack_size_ode",
    "fatigue_failure_lsf", "fatigue_failure_lsf_smooth", "crack_growth_model", "crack_measurement_likelihood",
    "MEASUREMENTS", "N_GRID", "CRITICAL_SIZE", "is_failed",
]

FAILED = math.inf
CRITICAL_SIZE = 50.0
MEASUREMENTS = ((3.0e5, 0.5), (2.0e6, 3.0))  # (cycles, measured crack depth in mm)
N_GRID = tuple(0.25e6 * k for k in range(1, 21))
PARAMS = ("a0", "dS", "lnC", "m")


def is_failed(a) -> bool:
    return bool(np.isinf(a))


@dataclass(frozen=True)
class CrackGrowthParams:
    a0: float = 1.0
    ac: float = CRITICAL_SIZE
    dS: float = 60.0
    lnC: float = -33.0
    m: float = 3.5
    n: float = 0.0

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")
        if not self.ac > self.a0:
            raise ValueError("ac must exceed a0")
        if not self.dS > 0:
            raise ValueError("dS must be positive")
        if self.m == 2:
            raise ValueError("m = 2 makes the closed-form exponent 1/(1 - m/2) undefined")
        if self.n < 0:
            raise ValueError("n must be nonnegative")


def crack_size_array(a0, dS, lnC, m, n: float) -> np.ndarray:
    """Vectorised a(n); inf where the crack has run away."""
    return kernels.crack_size(a0, dS, lnC, m, float(n))


def crack_size(params: CrackGrowthParams) -> float:
    """Crack size after params.n cycles, or FAILED (inf)."""
    p = params
    return float(crack_size_array(p.a0, p.dS, p.lnC, p.m, p.n))


def crack_size_ode(params: CrackGrowthParams, rtol: float = 1e-10) -> float:
    """Independent check: integrate da/dn in log form with an adaptive RK method."""
    p = params
    if p.n == 0:
        return p.a0
    k = math.exp(p.lnC) * p.dS ** p.m * math.pi ** (p.m / 2)

    def rhs(_, y):
        return [k * math.exp((p.m / 2 - 1) * y[0])]

    def blowup(_, y):
        return y[0] - 700.0
    blowup.terminal = True

    sol = solve_ivp(rhs, (0.0, p.n), [math.log(p.a0)], method="DOP853", rtol=rtol, atol=1e-14,
                    events=blowup)
    # status 1: blow-up event; -1: step size collapsed at the finite-time singularity
    if sol.status != 0:
        return FAILED
    return math.exp(sol.y[0, -1])


def fatigue_failure_lsf(ac: float, n: float) -> Leaf:
    """g = ac - a(n) over (a0, dS, lnC, m); a runaway crack gives g = -ac."""
    ac, n = float(ac), float(n)
    if n < 0:
        raise ValueError("n must be nonnegative")

    def g(env):
        a = crack_size_array(env["a0"], env["dS"], env["lnC"], env["m"], n)
        return np.where(np.isinf(a), -ac, ac - a)

    return Leaf(g, PARAMS, f"ac-a(n={n:g})")


def fatigue_failure_lsf_smooth(ac: float, n: float) -> Leaf:
    """Same failure domain as :func:`fatigue_failure_lsf`, written on the bracket.

    With B = (1 - m/2) C dS^m pi^(m/2) n + a0^(1-m/2) and e = 1 - m/2,
    a(n) >= ac is B <= ac^e for e < 0 (runaway included) and B >= ac^e
    for e > 0; both read (ac^e - B) / e <= 0, which tends to the log
    form ln(ac / a0) - C dS^2 pi n as m -> 2.  Unlike ac - a(n) it has no
    pole, which gradient-based searches need.
    """
    ac, n = float(ac), float(n)
    if n < 0:
        raise ValueError("n must be nonnegative")

    def g(env):
        a0, dS, lnC, m = np.broadcast_arrays(*(np.asarray(env[k], float) for k in PARAMS))
        e = 1.0 - 0.5 * m
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            k = np.exp(lnC) * np.maximum(dS, 0.0) ** m * np.pi ** (0.5 * m) * n
            out = (ac ** e - a0 ** e) / e - k
            two = e == 0
            if np.any(two):
                out = np.where(two, np.log(ac / a0) - k, out)
        return out if out.ndim else float(out)

    return Leaf(g, PARAMS, f"bracket(n={n:g})")


def crack_growth_model() -> ProbabilisticModel:
    return ProbabilisticModel(
        variables=(("a0", Exponential(1.0)), ("ac", Deterministic(CRITICAL_SIZE)),
                   ("dS", Normal(60.0, 10.0)), ("lnC", Normal(-33.0, 0.47)), ("m", Normal(3.5, 0.3))),
        correlations=(("lnC", "m", -0.9),),
    )


def crack_measurement_likelihood(n: float, measured: float, sigma: float = 1.0) -> Likelihood:
    """phi-type likelihood of a crack depth measured after n cycles with Normal error."""
    n = float(n)

    def predict(env):
        return crack_size_array(env["a0"], env["dS"], env["lnC"], env["m"], n)

    return additive_error_likelihood(predict, measured, Normal(0.0, sigma), PARAMS,
                                     f"a(n={n:g})={measured:g}")
