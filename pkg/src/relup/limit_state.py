"""Limit state functions over named variables and their system composition.

A value <= 0 means "inside the domain" (failure for an event, occurrence for
an observation).  Expressions are vectorised: variables may be bound to
numpy arrays and the result broadcasts accordingly.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "UnboundVariableError", "LimitStateExpression", "Leaf", "Intersection", "Union",
    "CutSetSystem", "CountingExpression", "evaluate", "failure_indicator", "leaf",
]


class UnboundVariableError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"variable {self.name!r} is not bound"


class LimitStateExpression:
    def evaluate(self, x: Mapping[str, object]):
        raise NotImplementedError

    @property
    def variables(self) -> tuple[str, ...]:
        raise NotImplementedError

    def leaves(self) -> list["Leaf"]:
        raise NotImplementedError

    def indicator(self, x):
        return np.asarray(self.evaluate(x)) <= 0.0

    def active_leaf(self, x) -> "Leaf":
        """Leaf whose value equals the composite at a single point x."""
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)


@dataclass(frozen=True, eq=False)
class Leaf(LimitStateExpression):
    """A scalar limit state ``func(env)`` reading the variables ``names``.

    ``func`` receives a mapping restricted to ``names`` and must be
    vectorised over numpy arrays.
    """

    func: Callable[[Mapping[str, object]], object]
    names: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def variables(self):
        return self.names

    def leaves(self):
        return [self]

    def evaluate(self, x):
        env = {}
        for n in self.names:
            try:
                env[n] = x[n]
            except KeyError:
                raise UnboundVariableError(n) from None
        out = self.func(env)
        if np.ndim(out) == 0:
            return float(out)
        return np.asarray(out, dtype=float)

    def active_leaf(self, x):
        return self

    def __repr__(self):
        return f"Leaf({self.label or getattr(self.func, '__name__', 'func')}, {list(self.names)})"


def _union_names(children) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for c in children:
        for n in c.variables:
            seen.setdefault(n, None)
    return tuple(seen)


def _stack(children, x):
    vals = [c.evaluate(x) for c in children]
    return np.broadcast_arrays(*[np.asarray(v, float) for v in vals])


def _pick(values, fn):
    """Index of max/min, lowest index on ties."""
    best, idx = None, 0
    for i, v in enumerate(values):
        if best is None or fn(v, best):
            best, idx = v, i
    return idx


@dataclass(frozen=True, eq=False)
class Intersection(LimitStateExpression):
    """All children in their domain: max of children (parallel system)."""

    children: tuple[LimitStateExpression, ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("Intersection needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def variables(self):
        return _union_names(self.children)

    def leaves(self):
        return [leaf for c in self.children for leaf in c.leaves()]

    def evaluate(self, x):
        out = np.maximum.reduce(_stack(self.children, x))
        return float(out) if out.ndim == 0 else out

    def active_leaf(self, x):
        vals = [float(c.evaluate(x)) for c in self.children]
        return self.children[_pick(vals, lambda a, b: a > b)].active_leaf(x)


@dataclass(frozen=True, eq=False)
class Union(LimitStateExpression):
    """Any child in its domain: min of children (series system)."""

    children: tuple[LimitStateExpression, ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("Union needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def variables(self):
        return _union_names(self.children)

    def leaves(self):
        return [leaf for c in self.children for leaf in c.leaves()]

    def evaluate(self, x):
        out = np.minimum.reduce(_stack(self.children, x))
        return float(out) if out.ndim == 0 else out

    def active_leaf(self, x):
        vals = [float(c.evaluate(x)) for c in self.children]
        return self.children[_pick(vals, lambda a, b: a < b)].active_leaf(x)


@dataclass(frozen=True, eq=False)
class CutSetSystem(LimitStateExpression):
    """General system: min over cut sets of max over the components in each.

    ``cut_sets`` holds 0-based indices into ``components``.
    """

    components: tuple[LimitStateExpression, ...]
    cut_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        comps = tuple(self.components)
        sets = tuple(tuple(int(i) for i in c) for c in self.cut_sets)
        if not comps or not sets:
            raise ValueError("CutSetSystem needs components and at least one cut set")
        for c in sets:
            if not c:
                raise ValueError("empty cut set")
            for i in c:
                if not 0 <= i < len(comps):
                    raise ValueError(f"cut set index {i} out of range")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "cut_sets", sets)

    @property
    def variables(self):
        return _union_names(self.components)

    def leaves(self):
        return [leaf for c in self.components for leaf in c.leaves()]

    def as_union(self) -> Union:
        return Union(tuple(Intersection(tuple(self.components[i] for i in c)) for c in self.cut_sets))

    def evaluate(self, x):
        vals = _stack(self.components, x)
        per_set = [np.maximum.reduce([vals[i] for i in c]) for c in self.cut_sets]
        out = np.minimum.reduce(per_set)
        return float(out) if np.ndim(out) == 0 else out

    def active_leaf(self, x):
        return self.as_union().active_leaf(x)


@dataclass(eq=False)
class CountingExpression(LimitStateExpression):
    """Wraps an expression and counts evaluated points (array elements)."""

    inner: LimitStateExpression
    count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def variables(self):
        return self.inner.variables

    def leaves(self):
        return self.inner.leaves()

    def evaluate(self, x):
        out = self.inner.evaluate(x)
        with self._lock:
            self.count += int(np.size(out))
        return out

    def active_leaf(self, x):
        return self.inner.active_leaf(x)


def evaluate(expr: LimitStateExpression, x: Mapping[str, object]):
    return expr.evaluate(x)


def failure_indicator(expr: LimitStateExpression, x: Mapping[str, object]):
    """True where the point lies in the closed domain {value <= 0}."""
    out = expr.indicator(x)
    return bool(out) if np.ndim(out) == 0 else out


def leaf(names: Sequence[str], label: str = ""):
    """Decorator building a Leaf from a function of keyword-style env."""
    def wrap(func):
        return Leaf(func, tuple(names), label or func.__name__)
    return wrap
