"""Likelihood functions of the reduced variables built from measurements.

A :class:`Likelihood` is defined only up to a positive constant; downstream
conditional probabilities do not depend on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .probability import Marginal

__all__ = [
    "Likelihood", "additive_error_likelihood", "likelihood_from_equality_lsf",
    "product_likelihood", "regularize_equality", "constant_likelihood",
]


@dataclass(frozen=True, eq=False)
class Likelihood:
    """Nonnegative vectorised function of the named variables ``names``."""

    func: Callable[[Mapping[str, object]], object]
    names: tuple[str, ...]
    sup_bound: float | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def variables(self):
        return self.names

    def eval(self, x: Mapping[str, object]):
        env = {n: x[n] for n in self.names}
        out = self.func(env)
        return float(out) if np.ndim(out) == 0 else np.asarray(out, float)

    __call__ = eval


def constant_likelihood(value: float) -> Likelihood:
    if value < 0:
        raise ValueError("likelihood must be nonnegative")
    return Likelihood(lambda env: value, (), sup_bound=value, label=f"const({value})")


def additive_error_likelihood(prediction: Callable, measured: float, error: Marginal,
                              names: Sequence[str], label: str = "") -> Likelihood:
    """L(x) = f_err(measured - prediction(x)).

    ``prediction`` receives the mapping of ``names`` and returns the model
    value of the measured quantity.
    """
    if error.is_deterministic:
        raise ValueError("measurement error must have a density; use regularize_equality for exact data")
    measured = float(measured)

    def func(env):
        return error.pdf(measured - np.asarray(prediction(env), float))

    return Likelihood(func, tuple(names), error.mode_density(), label or f"additive({measured})")


def _bisect(h, lo, hi, flo, n_iter=80):
    # vectorised bisection on [lo, hi] where sign(h(lo)) != sign(h(hi))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        same = (fm > 0) == (flo > 0)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(lo))):
            break
    return 0.5 * (lo + hi)


def likelihood_from_equality_lsf(h: Callable, noise: Marginal, bracket: tuple[float, float],
                                 names: Sequence[str], grid: int = 512, chunk: int = 2048,
                                 label: str = "") -> Likelihood:
    """Likelihood from an equality limit state h(x_g, x_h) = 0 with scalar noise x_h.

    L(x_g) = sum_j f_noise(root_j(x_g)) over the roots of h in ``bracket``.
    Roots are located by scanning ``grid`` equal cells for sign changes and
    bisecting.  Two roots inside one cell cancel and are missed, so the grid
    must resolve the root spacing; roots outside ``bracket`` are ignored.
    X_h must be independent of X_g.
    """
    lo_b, hi_b = map(float, bracket)
    if not hi_b > lo_b:
        raise ValueError("bracket must be an increasing interval")
    if noise.is_deterministic:
        raise ValueError("noise variable must have a density")
    nodes = np.linspace(lo_b, hi_b, grid + 1)

    def func(env):
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        flat = {k: np.broadcast_to(np.asarray(v, float), shape).ravel() for k, v in env.items()}
        size = int(np.prod(shape)) if shape else 1
        out = np.zeros(size)
        for s in range(0, size, chunk):
            sub = {k: (v[s:s + chunk] if v.size > 1 else v) for k, v in flat.items()}
            k = min(chunk, size - s)
            sub_col = {n: (v[:, None] if np.size(v) > 1 else v) for n, v in sub.items()}
            vals = np.broadcast_to(np.asarray(h(sub_col, nodes[None, :]), float), (k, grid + 1))
            if not np.all(np.isfinite(vals)):
                raise ValueError("equality limit state is not finite on the bracket")
            pos = vals > 0
            exact = vals == 0
            change = pos[:, :-1] != pos[:, 1:]
            rows, cells = np.nonzero(change & ~exact[:, :-1] & ~exact[:, 1:])
            total = np.zeros(k)
            if rows.size:
                row_env = {n: (v[rows] if np.size(v) > 1 else v) for n, v in sub.items()}
                roots = _bisect(lambda t: np.asarray(h(row_env, t), float),
                                nodes[cells], nodes[cells + 1], vals[rows, cells])
                np.add.at(total, rows, noise.pdf(roots))
            er, ec = np.nonzero(exact)
            if er.size:
                np.add.at(total, er, noise.pdf(nodes[ec]))
            out[s:s + k] = total
        return out.reshape(shape) if shape else float(out[0])

    return Likelihood(func, tuple(names), None, label or "equality_lsf")


def product_likelihood(parts: Sequence[Likelihood]) -> Likelihood:
    parts = tuple(parts)
    if not parts:
        raise ValueError("product of zero likelihoods")
    if len(parts) == 1:
        return parts[0]
    names: dict[str, None] = {}
    for p in parts:
        for n in p.names:
            names.setdefault(n, None)
    bound = None
    if all(p.sup_bound is not None for p in parts):
        bound = math.prod(p.sup_bound for p in parts)

    def func(env):
        out = 1.0
        for p in parts:
            out = out * np.asarray(p.func({n: env[n] for n in p.names}), float)
        return out

    return Likelihood(func, tuple(names), bound, "*".join(p.label for p in parts))


def regularize_equality(h: Callable, sigma: float, names: Sequence[str], label: str = "") -> Likelihood:
    """Exact equality h(x) = 0 smoothed by an artificial Normal error of std ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    sigma = float(sigma)

    def func(env):
        return kernels.norm_pdf(np.asarray(h(env), float) / sigma) / sigma

    return Likelihood(func, tuple(names), 1.0 / (sigma * math.sqrt(2 * math.pi)), label or "regularized")
