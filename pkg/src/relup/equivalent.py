"""Equality observations as inequality domains in an augmented space.

A likelihood L(x) is represented by the limit state

    h_e(x, u) = u - Phi^-1[c L(x)],   u ~ N(0, 1),

whose domain {h_e <= 0} has probability c L(x) over u at fixed x.  Each
likelihood gets its own auxiliary standard Normal variable.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .likelihood import Likelihood
from .limit_state import Intersection, Leaf, LimitStateExpression
from .probability import Normal, ProbabilisticModel

__all__ = [
    "CL_FLOOR", "CL_CEIL", "FromSupBound", "UserValue", "EmpiricalMax", "scale_constant",
    "ClampStats", "EquivalentLSF", "equivalent_lsf", "AugmentedProblem", "augment",
    "BoundViolationError",
]

CL_FLOOR = 1e-300
# largest double below 1; keeps Phi^-1 finite (about 8.2) at the likelihood peak
CL_CEIL = float(np.nextafter(1.0, 0.0))
MAX_VIOLATION_FRACTION = 1e-3


class BoundViolationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FromSupBound:
    pass


@dataclass(frozen=True)
class UserValue:
    c: float


@dataclass(frozen=True)
class EmpiricalMax:
    samples: int = 10_000
    safety: float = 10.0
    seed: int = 0


def scale_constant(L: Likelihood, strategy=None, model: ProbabilisticModel | None = None) -> float:
    """Positive c with c*L <= 1.

    ``strategy`` is FromSupBound(), UserValue(c), EmpiricalMax(...) or None
    (sup bound when known, else empirical maximum over prior samples).
    """
    if strategy is None:
        strategy = FromSupBound() if L.sup_bound is not None else EmpiricalMax()
    if isinstance(strategy, UserValue):
        if not strategy.c > 0:
            raise ValueError("scale constant must be positive")
        return float(strategy.c)
    if isinstance(strategy, FromSupBound):
        if L.sup_bound is None:
            raise ValueError(f"likelihood {L.label!r} has no known upper bound")
        if not L.sup_bound > 0:
            raise ValueError("likelihood upper bound must be positive")
        return 1.0 / float(L.sup_bound)
    if isinstance(strategy, EmpiricalMax):
        if model is None:
            raise ValueError("EmpiricalMax needs the probabilistic model to draw probe samples")
        x = model.sample(strategy.seed, strategy.samples)
        peak = float(np.max(np.asarray(L.eval(x), float)))
        if not peak > 0:
            raise ValueError(f"likelihood {L.label!r} vanishes on all probe samples")
        return 1.0 / (strategy.safety * peak)
    raise TypeError(f"unknown scale strategy {strategy!r}")


@dataclass
class ClampStats:
    """Counters for c*L values clamped before the inverse cdf."""

    evaluations: int = 0
    floor_hits: int = 0
    over_one: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, n, n_floor, n_over):
        with self._lock:
            self.evaluations += n
            self.floor_hits += n_floor
            self.over_one += n_over

    def violation_fraction(self) -> float:
        return self.over_one / self.evaluations if self.evaluations else 0.0

    def as_dict(self):
        return {"evaluations": self.evaluations, "floor_hits": self.floor_hits, "over_one": self.over_one}


class EquivalentLSF(Leaf):
    """Leaf for u - Phi^-1[clamp(c L(x))]."""

    def __init__(self, likelihood: Likelihood, c: float, aux_name: str):
        stats = ClampStats()

        def func(env):
            cl = c * np.asarray(likelihood.func({n: env[n] for n in likelihood.names}), float)
            cl = np.where(np.isnan(cl), 0.0, cl)  # undefined prediction: observation impossible
            u = np.asarray(env[aux_name], float)
            h, n_floor, n_over = kernels.equivalent_lsf(u, cl, CL_FLOOR, CL_CEIL)
            stats.add(int(np.size(h)), n_floor, n_over)
            return h if np.ndim(h) else float(h)

        super().__init__(func, tuple(likelihood.names) + (aux_name,), f"h_e[{likelihood.label}]")
        object.__setattr__(self, "likelihood", likelihood)
        object.__setattr__(self, "c", float(c))
        object.__setattr__(self, "aux_name", aux_name)
        object.__setattr__(self, "stats", stats)


def equivalent_lsf(L: Likelihood, c: float, aux_name: str) -> EquivalentLSF:
    if not c > 0:
        raise ValueError("scale constant must be positive")
    if aux_name in L.names:
        raise ValueError(f"auxiliary name {aux_name!r} collides with a likelihood variable")
    return EquivalentLSF(L, c, aux_name)


@dataclass(frozen=True, eq=False)
class AugmentedProblem:
    """Event and observation domains over X+ = [X_g; U_1..U_n]."""

    base_model: ProbabilisticModel
    model: ProbabilisticModel
    event: LimitStateExpression
    observation_lsfs: tuple[EquivalentLSF, ...]
    aux_names: tuple[str, ...]
    scale_constants: tuple[float, ...]

    @property
    def dim(self) -> int:
        return self.model.dim

    def numerator(self) -> LimitStateExpression:
        if not self.observation_lsfs:
            return self.event
        return Intersection((self.event,) + tuple(self.observation_lsfs))

    def denominator(self) -> LimitStateExpression | None:
        """None when there are no observations (the domain is the whole space)."""
        if not self.observation_lsfs:
            return None
        return Intersection(tuple(self.observation_lsfs))

    def clamp_stats(self) -> dict:
        return {name: h.stats.as_dict() for name, h in zip(self.aux_names, self.observation_lsfs)}

    def check_bound_violations(self):
        for name, h in zip(self.aux_names, self.observation_lsfs):
            frac = h.stats.violation_fraction()
            if frac > MAX_VIOLATION_FRACTION:
                raise BoundViolationError(
                    f"c*L exceeded 1 on {frac:.3%} of evaluations of {name}; "
                    "choose a smaller scale constant")


def augment(model: ProbabilisticModel, event: LimitStateExpression, likelihoods: Sequence[Likelihood],
            strategy=None, aux_prefix: str = "U") -> AugmentedProblem:
    """Add one auxiliary standard Normal per likelihood and build the h_e leaves.

    ``strategy`` is applied to every likelihood, or may be a list with one
    entry per likelihood.
    """
    likelihoods = list(likelihoods)
    known = set(model.names)
    for n in event.variables:
        if n not in known:
            raise ValueError(f"event reads undeclared variable {n!r}")
    strategies = strategy if isinstance(strategy, (list, tuple)) else [strategy] * len(likelihoods)
    if len(strategies) != len(likelihoods):
        raise ValueError("one scale strategy per likelihood expected")
    aux, lsfs, cs = [], [], []
    for i, (L, strat) in enumerate(zip(likelihoods, strategies), start=1):
        for n in L.names:
            if n not in known:
                raise ValueError(f"likelihood {L.label!r} reads undeclared variable {n!r}")
        name = f"{aux_prefix}{i}"
        if name in known:
            raise ValueError(f"auxiliary variable name {name!r} collides with a model variable")
        c = scale_constant(L, strat, model)
        aux.append(name)
        cs.append(c)
        lsfs.append(equivalent_lsf(L, c, name))
    extended = model.extended([(n, Normal(0.0, 1.0)) for n in aux])
    return AugmentedProblem(model, extended, event, tuple(lsfs), tuple(aux), tuple(cs))
