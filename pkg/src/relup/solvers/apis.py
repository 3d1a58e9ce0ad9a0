"""Axis-parallel importance sampling.

Points v are drawn on the hyperplane through the origin orthogonal to the
design-point direction alpha.  Along each ray v + t*alpha the failure set
is located and the estimate is

    p = mean_i [Phi(-d_in(v_i)) - Phi(-d_out(v_i))] phi(v_i) / psi(v_i)

with phi and psi (d-1)-dimensional densities in hyperplane coordinates.
d_out is +inf unless the ray leaves the failure set again, which happens
on the bounded observation domains of an augmented problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..limit_state import Intersection, LimitStateExpression
from ..probability import ProbabilisticModel
from ..rng import standard_normal_rows
from ._common import (ApisOptions, ComponentLSF, ReliabilityResult, SolverError, StandardLSF,
                      beta_from_p, fd_hessian, fd_jacobian, tangent_basis)
from .form import form

__all__ = ["line_search", "ray_segments", "scan_segments", "apis", "RaySegments"]

SCAN_CELLS = 64
APIS_STREAM = 7
SURROGATE_STREAM = 11
SURROGATE_GRID = 481
FIRST_STEP = 0.5
EXIT_STEP = 0.25
SCAN_STEP = 0.2


def _bisect_scalar(G, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def line_search(G, t_max: float = 12.0, tol: float = 1e-6):
    """Signed distance to the surface along a ray, or None without a crossing.

    Scans 64 equal cells of [-t_max, t_max] for a transition from G > 0 to
    G <= 0 (safe side toward smaller t), takes the one nearest t = 0 and
    bisects it to width ``tol``.
    """
    nodes = np.linspace(-t_max, t_max, SCAN_CELLS + 1)
    vals = np.array([G(float(t)) for t in nodes])
    cells = [j for j in range(SCAN_CELLS) if vals[j] > 0 and not vals[j + 1] > 0]
    if not cells:
        return None
    j = min(cells, key=lambda k: (abs(0.5 * (nodes[k] + nodes[k + 1])), k))
    return _bisect_scalar(G, float(nodes[j]), float(nodes[j + 1]), tol)


@dataclass
class RaySegments:
    mass: np.ndarray       # normal measure of the failure set on each ray
    t_in: np.ndarray       # first entry (t_max if none, -inf if failing at -t_max)
    status: np.ndarray     # 0 crossing, 1 safe on the whole range, 2 failing below -t_max
    n_segments: np.ndarray
    hinted: np.ndarray     # crossings located from surrogate predictions


def _refine(g_at, idx, a, b, fa, fb, tol, max_iter=60):
    """Illinois regula falsi on brackets [a, b] whose ends lie on opposite sides of G = 0."""
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    root = 0.5 * (a + b)
    last = np.zeros(a.size, dtype=np.int8)
    prev = np.full(a.size, np.nan)
    open_ = np.arange(a.size)
    for _ in range(max_iter):
        if open_.size == 0:
            break
        A, B, FA, FB = a[open_], b[open_], fa[open_], fb[open_]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = B - FB * (B - A) / (FB - FA)
        lo, hi = np.minimum(A, B), np.maximum(A, B)
        bad = ~np.isfinite(x) | (x <= lo) | (x >= hi)
        x = np.where(bad, 0.5 * (A + B), x)
        fx = g_at(idx[open_], x)
        same_b = (fx > 0) == (FB > 0)
        # replace the end on fx's side; halve the kept end on a repeat
        rb = open_[same_b]
        b[rb], fb[rb] = x[same_b], fx[same_b]
        fa[rb[last[rb] == 1]] *= 0.5
        ra = open_[~same_b]
        a[ra], fa[ra] = x[~same_b], fx[~same_b]
        fb[ra[last[ra] == -1]] *= 0.5
        last[open_] = np.where(same_b, 1, -1)
        done = (np.abs(x - prev[open_]) <= tol) | (np.abs(b[open_] - a[open_]) <= tol) | (fx == 0)
        prev[open_] = x
        root[open_[done]] = x[done]
        open_ = open_[~done]
    root[open_] = 0.5 * (a[open_] + b[open_])
    return root


def _march(g_at, idx, t0, g0, sign, step, limit, want_positive, stop=None):
    """Step from t0 in direction ``sign`` (doubling) until G changes side.

    Returns (found, t_prev, g_prev, t_hit, g_hit); rays that pass ``limit``
    or satisfy ``stop(t)`` are reported as not found.
    """
    n = idx.size
    found = np.zeros(n, bool)
    t_prev, g_prev = t0.copy(), g0.copy()
    t_hit, g_hit = np.full(n, np.nan), np.full(n, np.nan)
    pending = np.arange(n)
    h = step
    while pending.size:
        t_new = t_prev[pending] + sign * h
        beyond = sign * t_new > limit
        t_new = np.where(beyond, sign * limit, t_new)
        g_new = g_at(idx[pending], t_new)
        hit = (g_new > 0) == want_positive
        sel = pending[hit]
        found[sel] = True
        t_hit[sel], g_hit[sel] = t_new[hit], g_new[hit]
        cont = ~hit & ~beyond
        t_prev[pending[cont]] = t_new[cont]
        g_prev[pending[cont]] = g_new[cont]
        keep = pending[cont]
        if stop is not None and keep.size:
            keep = keep[~stop(keep, t_prev[keep])]
        pending = keep
        h *= 2.0
    return found, t_prev, g_prev, t_hit, g_hit


def _exit_march(g_at, rays, t_fail, inside_mass, t_max, tol, tail_rtol):
    """First failure-to-safe crossing above the failing points ``t_fail`` (inf if none found)."""
    t_out = np.full(rays.size, np.inf)
    if rays.size == 0:
        return t_out

    def negligible(rel, t):
        tail = kernels.norm_cdf(-t)
        return tail <= tail_rtol * (inside_mass[rel] - tail)

    f, tp, gp, th, gh = _march(g_at, rays, t_fail, g_at(rays, t_fail), +1, EXIT_STEP, t_max, True,
                               stop=negligible)
    if f.any():
        t_out[f] = _refine(g_at, rays[f], tp[f], th[f], gp[f], gh[f], tol)
    return t_out


def _plain_segments(g_at, rays, start, t_max, tol, tail_rtol):
    """Entry nearest ``start`` by outward marching, then one exit search."""
    k = rays.size
    t0 = np.full(k, float(start))
    g0 = g_at(rays, t0)
    t_in = np.full(k, np.inf)
    status = np.zeros(k, dtype=np.int8)
    fail_t = np.full(k, np.nan)
    up = np.nonzero(g0 > 0)[0]
    if up.size:
        f, tp, gp, th, gh = _march(g_at, rays[up], t0[up], g0[up], +1, FIRST_STEP, t_max, False)
        status[up[~f]] = 1
        t_in[up[~f]] = t_max
        ok = up[f]
        if ok.size:
            t_in[ok] = _refine(g_at, rays[ok], tp[f], th[f], gp[f], gh[f], tol)
            fail_t[ok] = th[f]
    down = np.nonzero(~(g0 > 0))[0]
    if down.size:
        f, tp, gp, th, gh = _march(g_at, rays[down], t0[down], g0[down], -1, FIRST_STEP, t_max, True)
        status[down[~f]] = 2
        t_in[down[~f]] = -np.inf
        fail_t[down] = t0[down]
        ok = down[f]
        if ok.size:
            t_in[ok] = _refine(g_at, rays[ok], th[f], tp[f], gh[f], gp[f], tol)
    entered = np.nonzero(status != 1)[0]
    t_out = np.full(k, np.inf)
    inside = kernels.norm_cdf(-t_in)
    t_out[entered] = _exit_march(g_at, rays[entered], fail_t[entered], inside[entered], t_max, tol, tail_rtol)
    mass = np.where(status == 1, kernels.norm_cdf(-t_in), inside - kernels.norm_cdf(-t_out))
    return mass, t_in, status, (status != 1).astype(np.int64)


def _hinted_crossings(g_at, ray, t_c, t_max, tol):
    """Bracket each predicted crossing with a pair of probes and refine it.

    Returns (t, entering, ok) per hint; ``ok`` is False when no sign change
    was found near the prediction.
    """
    n = ray.size
    order = np.lexsort((t_c, ray))
    ray, t_c = ray[order], t_c[order]
    gap = np.full(n, np.inf)
    same_next = ray[1:] == ray[:-1]
    d = np.diff(t_c)
    gap[:-1] = np.where(same_next, d, np.inf)
    gap[1:] = np.minimum(gap[1:], np.where(same_next, d, np.inf))
    ok = np.zeros(n, bool)
    a = np.empty(n)
    b = np.empty(n)
    ga = np.empty(n)
    gb = np.empty(n)
    todo = np.arange(n)
    delta = np.minimum(0.1, 0.45 * gap)
    for _ in range(3):
        if todo.size == 0:
            break
        lo = np.maximum(t_c[todo] - delta[todo], -t_max)
        hi = np.minimum(t_c[todo] + delta[todo], t_max)
        glo = g_at(ray[todo], lo)
        ghi = g_at(ray[todo], hi)
        good = (glo > 0) != (ghi > 0)
        sel = todo[good]
        a[sel], b[sel], ga[sel], gb[sel] = lo[good], hi[good], glo[good], ghi[good]
        ok[sel] = True
        todo = todo[~good]
        delta[todo] = np.minimum(3.0 * delta[todo], 0.45 * gap[todo])
    t = np.full(n, np.nan)
    idx = np.nonzero(ok)[0]
    if idx.size:
        t[idx] = _refine(g_at, ray[idx], a[idx], b[idx], ga[idx], gb[idx], tol)
    entering = ga > 0
    fail_pt = np.where(entering, b, a)
    inv = np.empty(n, dtype=np.int64)
    inv[order] = np.arange(n)
    return t[inv], entering[inv], ok[inv], fail_pt[inv]


def _assemble(t, entering, fail_pt, failing_before):
    """Walk sorted crossings; returns (closed mass, segments, first entry, open entry, open failing point)."""
    failing = failing_before
    seg_in = -np.inf if failing else None
    first = -np.inf if failing else None
    last_fail = None
    total, count = 0.0, 0
    for tj, ej, fj in zip(t, entering, fail_pt):
        if ej and not failing:
            failing, seg_in, last_fail = True, tj, fj
            first = tj if first is None else first
        elif not ej and failing:
            total += float(kernels.norm_cdf(-seg_in) - kernels.norm_cdf(-tj))
            count += 1
            failing = False
    if failing:
        return total, count + 1, first, seg_in, last_fail
    return total, count, first, None, None


def _scan_crossings(g_at, ray, lo, hi, step, tol, t_max):
    """All sign changes of G on a uniform probe grid over [lo, hi], refined."""
    nodes = np.arange(lo, hi + 0.5 * step, step)
    r = np.full(nodes.size, ray)
    g = g_at(r, nodes)
    pos = g > 0
    cells = np.nonzero(pos[1:] != pos[:-1])[0]
    a, b = nodes[cells], nodes[cells + 1]
    t = _refine(g_at, np.full(cells.size, ray), a, b, g[cells], g[cells + 1], tol)
    entering = pos[cells]
    fail_pt = np.where(entering, b, a)
    failing_before = not pos[0]
    if failing_before and lo > -t_max:
        # failing at the window start: find the entry below it
        idx = np.array([ray])
        f, tp, gp, th, gh = _march(g_at, idx, np.array([lo]), g[:1], -1, FIRST_STEP, t_max, True)
        if f[0]:
            t_in = _refine(g_at, idx, th, tp, gh, gp, tol)
            t = np.concatenate([t_in, t])
            entering = np.concatenate([[True], entering])
            fail_pt = np.concatenate([[lo], fail_pt])
            failing_before = False
    return t, entering, fail_pt, failing_before


def ray_segments(G, origins: np.ndarray, direction: np.ndarray, start: float, t_max: float,
                 tol: float, tail_rtol: float = 1e-3, hints=None) -> RaySegments:
    """Normal measure of the failure set on each ray origins[i] + t*direction.

    Without hints the entry is the safe-to-failure crossing nearest
    ``start`` (outward marching with doubling steps) followed by one exit
    search.  ``hints`` = (ray, t, ...) are predicted crossings; each is
    confirmed by a bracketing probe pair and refined, so thin failure
    segments that marching would step over are kept.  Rays whose
    predictions do not confirm are probed on a SCAN_STEP grid around the
    predicted window instead.  The exit search after the last entry stops
    once the normal tail is below ``tail_rtol`` of the mass already inside.
    """
    k = origins.shape[0]

    def g_at(idx, t):
        return np.asarray(G(origins[idx] + t[:, None] * direction[None, :]), float).reshape(-1)

    mass = np.zeros(k)
    t_first = np.full(k, np.inf)
    status = np.zeros(k, dtype=np.int8)
    nseg = np.zeros(k, dtype=np.int64)
    hinted = np.zeros(k, bool)

    if hints is not None and len(hints[0]):
        h_ray, h_t = np.asarray(hints[0]), np.asarray(hints[1], float)
        t, entering, ok, fail_pt = _hinted_crossings(g_at, h_ray, h_t, t_max, tol)
        open_rays, open_t, open_fail = [], [], []
        for r in np.unique(h_ray):
            mine = np.nonzero(h_ray == r)[0]
            sel = mine[ok[mine]]
            sel = sel[np.argsort(t[sel])]
            usable = sel.size > 0 and (entering[sel[0]] or not np.any(h_t[mine[~ok[mine]]] < t[sel[0]]))
            if usable:
                parts = (t[sel], entering[sel], fail_pt[sel], not entering[sel[0]])
            else:
                lo = max(-t_max, float(h_t[mine].min()) - 0.5)
                hi = min(t_max, float(h_t[mine].max()) + 0.5)
                parts = _scan_crossings(g_at, r, lo, hi, SCAN_STEP, tol, t_max)
                if parts[0].size == 0 and not parts[3]:
                    continue
            total, count, first, seg_in, fpt = _assemble(*parts)
            if seg_in is not None:
                open_rays.append(r)
                open_t.append(seg_in)
                open_fail.append(fpt if fpt is not None else -t_max)
            hinted[r] = True
            mass[r] = total
            nseg[r] = count
            t_first[r] = first if first is not None else t_max
            status[r] = 2 if first == -np.inf else 0
        if open_rays:
            rays = np.array(open_rays)
            inside = kernels.norm_cdf(-np.array(open_t))
            t_out = _exit_march(g_at, rays, np.array(open_fail, float), inside, t_max, tol, tail_rtol)
            mass[rays] += inside - kernels.norm_cdf(-t_out)

    rest = np.nonzero(~hinted)[0]
    if rest.size:
        m, t_in, st, ns = _plain_segments(g_at, rest, start, t_max, tol, tail_rtol)
        mass[rest], t_first[rest], status[rest], nseg[rest] = m, t_in, st, ns
    return RaySegments(mass, t_first, status, nseg, hinted)


def scan_segments(G, origins: np.ndarray, direction: np.ndarray, t_max: float, cells: int,
                  tol: float) -> RaySegments:
    """Failure measure per ray from a uniform probe grid over [-t_max, t_max].

    Every sign change between neighbouring nodes is refined; failure at an
    end node extends to infinity.  Segments thinner than a cell can still
    be missed, but the cost does not depend on the geometry.
    """
    k = origins.shape[0]
    nodes = np.linspace(-t_max, t_max, cells + 1)
    pts = origins[:, None, :] + nodes[None, :, None] * direction[None, None, :]
    g = np.asarray(G(pts.reshape(-1, direction.size)), float).reshape(k, cells + 1)
    pos = g > 0
    ray, cell = np.nonzero(pos[:, 1:] != pos[:, :-1])

    def g_at(idx, t):
        return np.asarray(G(origins[idx] + t[:, None] * direction[None, :]), float).reshape(-1)

    t = _refine(g_at, ray, nodes[cell], nodes[cell + 1], g[ray, cell], g[ray, cell + 1], tol)
    entering = pos[ray, cell]
    mass = np.zeros(k)
    t_first = np.full(k, float(t_max))
    nseg = np.zeros(k, dtype=np.int64)
    bounds = np.split(np.arange(ray.size), np.searchsorted(ray, np.arange(1, k)))
    for r in range(k):
        sel = bounds[r]
        total, count, first, seg_in, _ = _assemble(t[sel], entering[sel], np.zeros(sel.size), not pos[r, 0])
        if seg_in is not None:
            total += float(kernels.norm_cdf(-seg_in))
        mass[r], nseg[r] = total, count
        if first is not None:
            t_first[r] = first
    status = np.where(pos[:, 0], 0, 2).astype(np.int8)
    safe = pos.all(axis=1)
    status[safe] = 1
    mass[safe] = float(kernels.norm_cdf(-t_max))
    return RaySegments(mass, t_first, status, nseg, np.zeros(k, bool))


def _components(expr):
    if isinstance(expr, Intersection) and len(expr.children) > 1:
        return list(expr.children)
    return [expr]


def _log_std_normal(w):
    return -0.5 * np.sum(w * w, axis=1) - 0.5 * w.shape[1] * math.log(2 * math.pi)


def _log_gauss(w, mu, chol):
    z = np.linalg.solve(chol, (w - mu).T)
    return (-0.5 * np.sum(z * z, axis=0) - np.log(np.diag(chol)).sum()
            - 0.5 * w.shape[1] * math.log(2 * math.pi))


@dataclass
class QuadraticSurrogate:
    """Second-order expansion of every component at the design point."""

    u_star: np.ndarray
    g: np.ndarray
    J: np.ndarray
    H: np.ndarray

    @classmethod
    def build(cls, model, expr, u_star, counter):
        F = ComponentLSF(model, _components(expr), counter)
        g, J = fd_jacobian(F, u_star)
        return cls(u_star, g, J, fd_hessian(F, u_star))

    def inside(self, v, direction, t):
        """Boolean (rays, len(t)): surrogate failure indicator along each ray."""
        D0 = v - self.u_star
        out = np.ones((v.shape[0], t.size), bool)
        for i in range(self.g.size):
            HD = D0 @ self.H[i]
            a = self.g[i] + D0 @ self.J[i] + 0.5 * np.sum(HD * D0, axis=1)
            b = direction @ self.J[i] + HD @ direction
            c = direction @ self.H[i] @ direction
            out &= (a[:, None] + b[:, None] * t[None, :] + 0.5 * c * t[None, :] ** 2) <= 0
        return out

    def ray_mass(self, v, direction, t_max):
        nodes = np.linspace(-t_max, t_max, SURROGATE_GRID)
        mid = 0.5 * (nodes[1:] + nodes[:-1])
        cell = kernels.norm_cdf(-nodes[:-1]) - kernels.norm_cdf(-nodes[1:])
        return self.inside(v, direction, mid).astype(float) @ cell

    def transitions(self, v, direction, t_max):
        """Predicted crossings per ray as (ray, t, entering) arrays."""
        nodes = np.linspace(-t_max, t_max, SURROGATE_GRID)
        ins = self.inside(v, direction, nodes)
        change = ins[:, 1:] != ins[:, :-1]
        ray, cell = np.nonzero(change)
        t = 0.5 * (nodes[cell] + nodes[cell + 1])
        return ray, t, ins[ray, cell + 1], ins[:, 0]


def _fit_density(surrogate, alpha, basis, opts, seed):
    """Gaussian on the hyperplane fitted to surrogate ray masses (no limit state calls)."""
    k = basis.shape[0]
    w = standard_normal_rows(seed, 0, opts.surrogate_rays, k, stream=SURROGATE_STREAM)
    mass = surrogate.ray_mass(w @ basis, alpha, opts.t_max)
    total = mass.sum()
    info = {"surrogate_p": float(total / w.shape[0])}
    if not total > 0:
        return None, info
    wt = mass / total
    ess = 1.0 / float(np.sum(wt * wt))
    info["surrogate_ess"] = ess
    if ess < 2 * k:
        return None, info
    mu = wt @ w
    C = ((w - mu).T * wt) @ (w - mu)
    C = 0.5 * (C + C.T) + 1e-4 * np.eye(k)
    info["psi_mean_norm"] = float(np.linalg.norm(mu))
    return (mu, np.linalg.cholesky(C)), info


def apis(model: ProbabilisticModel, expr: LimitStateExpression, opts: ApisOptions | None = None,
         seed: int = 0, form_result: ReliabilityResult | None = None) -> ReliabilityResult:
    """Failure probability by line searches parallel to the FORM direction alpha.

    Ray origins are drawn on the hyperplane through the origin orthogonal
    to alpha.  Each ray contributes the standard normal measure of its
    failure set, weighted by phi/psi on the hyperplane.  With
    ``density="surrogate"`` psi is a defensive Gaussian mixture fitted to a
    quadratic surrogate of the limit state at the design point.
    """
    opts = opts or ApisOptions()
    if form_result is None:
        form_result = form(model, expr)
    if not form_result.converged:
        raise SolverError("APIS needs a converged FORM design point")
    G = StandardLSF(model, expr)
    dim = model.dim
    if not G(np.zeros(dim)) > 0:
        raise SolverError("origin lies in the failure domain; APIS geometry is degenerate")
    u_star = np.asarray(form_result.diagnostics["design_point_u"], float)
    alpha = np.asarray(form_result.diagnostics["alpha"], float)
    alpha = alpha / np.linalg.norm(alpha)
    start = float(u_star @ alpha)
    basis = tangent_basis(alpha)
    k = basis.shape[0]
    n = opts.n_ls
    diag: dict = {"n_ls": n, "density": opts.density, "alpha": alpha.tolist(), "start": start,
                  "form_evals": form_result.n_evals}

    fitted = surrogate = None
    if opts.density == "surrogate" and k > 0:
        surrogate = QuadraticSurrogate.build(model, expr, u_star, G.counter)
        fitted, info = _fit_density(surrogate, alpha, basis, opts, seed)
        diag.update(info)
        diag["density"] = "surrogate" if fitted is not None else "standard"
    if fitted is not None:
        mu, chol = fitted
        z = standard_normal_rows(seed, 0, n, k + 1, stream=APIS_STREAM)
        defensive = kernels.norm_cdf(z[:, 0]) < opts.mixture
        w = np.where(defensive[:, None], z[:, 1:], mu + z[:, 1:] @ chol.T)
        log_psi = np.logaddexp(math.log(opts.mixture) + _log_std_normal(w),
                               math.log1p(-opts.mixture) + _log_gauss(w, mu, chol))
        weights = np.exp(_log_std_normal(w) - log_psi)
    else:
        s = opts.sampler_spread
        w = standard_normal_rows(seed, 0, n, k, stream=APIS_STREAM) * s if k else np.zeros((n, 0))
        if s == 1.0 or k == 0:
            weights = np.ones(n)
        else:
            r2 = np.sum(w * w, axis=1)
            weights = s ** k * np.exp(-0.5 * r2 * (1.0 - 1.0 / (s * s)))
    v = w @ basis if k else np.zeros((n, dim))
    if opts.scan_cells:
        seg = scan_segments(G, v, alpha, opts.t_max, opts.scan_cells, opts.tol)
    else:
        hints = surrogate.transitions(v, alpha, opts.t_max) if surrogate is not None else None
        seg = ray_segments(G, v, alpha, start, opts.t_max, opts.tol, hints=hints)
    terms = seg.mass * weights
    p = math.fsum(terms) / n
    stderr = float(np.std(terms, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    crossing = seg.status == 0
    diag.update({
        "no_crossing_safe": int(np.count_nonzero(seg.status == 1)),
        "no_crossing_failing": int(np.count_nonzero(seg.status == 2)),
        "multi_segment_rays": int(np.count_nonzero(seg.n_segments > 1)),
        "hinted_rays": int(np.count_nonzero(seg.hinted)),
        "mean_distance": float(np.mean(seg.t_in[crossing])) if crossing.any() else None,
        "weight_max": float(np.max(weights)),
    })
    return ReliabilityResult("apis", p, beta_from_p(p), G.count + form_result.n_evals, stderr, True, diag)
