"""Deterministic integration of a failure probability in up to three dimensions.

The last standard-normal coordinate is integrated exactly: its failure set
at fixed outer coordinates is a union of intervals located by a node scan
plus bisection, and contributes sum Phi(b) - Phi(a).  The remaining
coordinates are integrated with adaptive Gauss-Kronrod quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .. import kernels
from ..limit_state import LimitStateExpression
from ..probability import ProbabilisticModel
from ._common import ReliabilityResult, StandardLSF, beta_from_p

__all__ = ["QuadratureOptions", "quadrature", "interval_mass"]

MAX_DIM = 3


@dataclass(frozen=True)
class QuadratureOptions:
    t_max: float = 12.0
    nodes: int = 257
    epsrel: float = 1e-10
    limit: int = 200
    tol: float = 1e-12

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError("nodes must be >= 3")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")


def _bisect(G, lo, hi, glo, tol):
    # lo/hi arrays bracketing sign changes of G; glo > 0 flags the safe end at lo
    safe_lo = glo > 0
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        same = (G(mid) > 0) == safe_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def interval_mass(G, t_max: float = 12.0, nodes: int = 257, tol: float = 1e-12) -> float:
    """Standard normal measure of {t : G(t) <= 0}, G vectorised over t.

    Sign changes between scan nodes are refined by bisection; failure at
    an end node extends to infinity.  Pairs of crossings inside one cell
    are missed.
    """
    t = np.linspace(-t_max, t_max, nodes)
    g = np.asarray(G(t), float)
    fail = ~(g > 0)
    cells = np.nonzero(fail[1:] != fail[:-1])[0]
    edges = np.empty(0)
    if cells.size:
        edges = _bisect(G, t[cells], t[cells + 1], g[cells], tol)
    bounds = np.concatenate([[-np.inf] if fail[0] else [], edges, [np.inf] if fail[-1] else []])
    a, b = bounds[0::2], bounds[1::2]
    return float(np.sum(kernels.norm_cdf(b) - kernels.norm_cdf(a)))


def _breakpoints(f, lo, hi, n=257, tol=1e-10):
    """Points where f switches between zero and nonzero on a scan of [lo, hi]."""
    x = np.linspace(lo, hi, n)
    nz = np.array([f(v) != 0.0 for v in x])
    pts = []
    for j in np.nonzero(nz[1:] != nz[:-1])[0]:
        a, b = x[j], x[j + 1]
        while b - a > tol:
            mid = 0.5 * (a + b)
            if (f(mid) != 0.0) == nz[j]:
                a = mid
            else:
                b = mid
        pts.append(0.5 * (a + b))
    return pts


def quadrature(model: ProbabilisticModel, expr: LimitStateExpression,
               opts: QuadratureOptions | None = None) -> ReliabilityResult:
    """Failure probability by nested quadrature in standard normal space (dim <= 3)."""
    opts = opts or QuadratureOptions()
    d = model.dim
    if d < 1 or d > MAX_DIM:
        raise ValueError(f"quadrature supports 1 to {MAX_DIM} random variables, got {d}")
    G = StandardLSF(model, expr)
    T = opts.t_max

    def inner(*outer):
        head = np.asarray(outer, float)

        def along(t):
            t = np.atleast_1d(t)
            pts = np.empty((t.size, d))
            pts[:, :-1] = head
            pts[:, -1] = t
            return np.asarray(G(pts), float).reshape(-1)

        return interval_mass(along, T, opts.nodes, opts.tol)

    info: dict = {"dim": d, "nodes": opts.nodes, "t_max": T}
    if d == 1:
        p = inner()
        abserr = 0.0
    elif d == 2:
        def f(z):
            return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * inner(z)

        pts = _breakpoints(f, -T, T)
        p, abserr = integrate.quad(f, -T, T, epsabs=0.0, epsrel=opts.epsrel, limit=opts.limit,
                                   points=pts or None)
        info["breakpoints"] = pts
    else:
        def f(z2, z1):
            return math.exp(-0.5 * (z1 * z1 + z2 * z2)) / (2 * math.pi) * inner(z1, z2)

        p, abserr = integrate.dblquad(f, -T, T, -T, T, epsabs=0.0, epsrel=max(opts.epsrel, 1e-8))
    p = min(max(float(p), 0.0), 1.0)
    info["abserr"] = float(abserr)
    return ReliabilityResult("quadrature", p, beta_from_p(p), G.count, float(abserr), True, info)
