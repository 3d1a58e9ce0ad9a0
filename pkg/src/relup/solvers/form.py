"""First- and second-order reliability methods.

Components use the improved HL-RF iteration.  Intersections (parallel
systems, which is what every conditional numerator and denominator is) are
solved at the joint design point: the nearest point of the intersection,
found by sequential projection, with each active constraint linearised there and the
probability taken from the multinormal cdf.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from .. import kernels
from ..limit_state import Intersection, Leaf, LimitStateExpression
from ..probability import ProbabilisticModel
from .mvn import mvn_lower
from ._common import (ComponentLSF, FormOptions, ReliabilityResult, SolverError, StandardLSF, beta_from_p,
                      fd_gradient, fd_hessian, fd_jacobian, p_from_beta, tangent_basis)

__all__ = ["form", "sorm", "multinormal_upper", "breitung"]

_ACTIVE_TOL = 1e-4
# longest SQP step in standard space; keeps strongly curved constraints from
# throwing the iterate onto a far-away plateau
MAX_STEP = 3.0


def multinormal_upper(betas, R) -> float:
    """P[Y_i >= beta_i for all i], Y ~ N(0, R): the parallel-system FORM probability."""
    betas = np.asarray(betas, float)
    m = betas.size
    if m == 1:
        return p_from_beta(float(betas[0]))
    R = np.asarray(R, float)
    offdiag = R - np.diag(np.diag(R))
    if np.allclose(offdiag, 0.0, atol=1e-12):
        return float(np.prod(kernels.norm_cdf(-betas)))
    p, _ = mvn_lower(-betas, R)
    return float(min(max(p, 0.0), 1.0))


def breitung(beta: float, kappas) -> tuple[float, bool]:
    """Phi(-beta) prod (1 + beta kappa)^(-1/2); second item False when degenerate."""
    terms = 1.0 + beta * np.asarray(kappas, float)
    if np.any(terms <= 0.0) or not np.all(np.isfinite(terms)):
        return math.nan, False
    return p_from_beta(beta) / math.sqrt(float(np.prod(terms))), True


def _ihlrf(G: StandardLSF, expr: LimitStateExpression, opts: FormOptions):
    d = G.dim
    u = np.zeros(d) if opts.u0 is None else np.asarray(opts.u0, float).copy()
    g_origin = G(np.zeros(d))
    scale = abs(g_origin) if g_origin != 0 else 1.0
    smooth = isinstance(expr, Leaf)
    c_merit = 0.0
    history = []
    for it in range(1, opts.max_iter + 1):
        if smooth:
            g, grad = fd_gradient(G, u)
        else:
            g = G(u)
            active = G.child(expr.active_leaf(G.model.from_standard(u)))
            _, grad = fd_gradient(active, u, g0=float(active(u)))
        ng = float(np.linalg.norm(grad))
        if not np.isfinite(g) or not np.isfinite(ng) or ng == 0.0:
            return u, it, False, "vanishing or non-finite gradient", history
        alpha = -grad / ng
        history.append(float(np.linalg.norm(u)))
        if abs(g) <= opts.tol * scale and np.linalg.norm(u - (alpha @ u) * alpha) <= 10 * opts.tol * max(1.0, np.linalg.norm(u)):
            return u, it, True, "", history
        target = (alpha @ u + g / ng) * alpha
        step = target - u
        c_merit = max(c_merit, 2.0 * np.linalg.norm(u) / ng + 1.0 / ng)

        def merit(v, gv):
            return 0.5 * v @ v + c_merit * abs(gv)

        m0 = merit(u, g)
        slope = (u + c_merit * np.sign(g) * grad) @ step
        lam = 1.0
        for _ in range(40):
            cand = u + lam * step
            gc = G(cand)
            if np.isfinite(gc) and merit(cand, gc) <= m0 + 0.5 * lam * min(slope, 0.0):
                break
            lam *= 0.5
        u = cand
    return u, opts.max_iter, False, "maximum iterations reached", history


def _component_form(model, expr, opts) -> ReliabilityResult:
    G = StandardLSF(model, expr)
    u, iters, ok, msg, _ = _ihlrf(G, expr, opts)
    g_origin = float(G(np.zeros(model.dim)))
    norm = float(np.linalg.norm(u))
    sign = 1.0 if g_origin > 0 else -1.0
    diag = {
        "kind": "component", "iterations": iters, "design_point_u": u.tolist(),
        "design_point_x": {k: float(np.asarray(v)) for k, v in model.from_standard(u).items()},
        "alpha": (u / norm).tolist() if norm > 0 else [0.0] * model.dim,
        "beta_dp": norm, "origin_value": g_origin,
        "heuristic": not isinstance(expr, Leaf),
    }
    if not ok:
        diag["message"] = msg
        return ReliabilityResult("form", None, None, G.count, None, False, diag)
    beta = sign * norm
    return ReliabilityResult("form", p_from_beta(beta), beta, G.count, None, True, diag)


def _project_origin(A, b):
    """argmin |s| subject to A s >= b, through the nonnegative dual."""
    Q = A @ A.T
    Q = Q + 1e-12 * np.trace(Q) * np.eye(len(b))
    L = np.linalg.cholesky(Q)
    lam, _ = optimize.nnls(L.T, np.linalg.solve(L, b), maxiter=50 * len(b))
    return A.T @ lam, lam


def _joint_design_point(model, children, opts, counter_lsf):
    """Nearest point of the intersection of {G_i <= 0} by sequential projection.

    Every iteration linearises all constraints, projects the origin onto
    the linearised intersection and takes an Armijo step on the merit
    1/2|u|^2 + c sum max(G_i, 0), with a second-order correction when the
    full step is rejected.
    """
    F = ComponentLSF(model, children, counter_lsf.counter)
    d = model.dim
    u = np.zeros(d) if opts.u0 is None else np.asarray(opts.u0, float).copy()
    c_pen = 0.0
    ok, it = False, 0
    vals, J = fd_jacobian(F, u)
    for it in range(1, opts.max_iter + 1):
        s, lam = _project_origin(-J, vals - J @ u)
        step = s - u
        length = float(np.linalg.norm(step))
        if length > MAX_STEP:
            step *= MAX_STEP / length
        c_pen = max(c_pen, 1.5 * float(lam.max(initial=0.0)) + 1e-8)

        def merit(v, g):
            return 0.5 * v @ v + c_pen * float(np.maximum(g, 0.0).sum())

        m0 = merit(u, vals)
        slope = u @ step - c_pen * float(np.maximum(vals, 0.0).sum())
        def accept(v, g, t):
            return np.all(np.isfinite(g)) and merit(v, g) <= m0 + 1e-4 * t * min(slope, 0.0)

        cand = u + step
        gc = F(cand)
        if not accept(cand, gc, 1.0):
            # second-order correction: pull the full step back onto the
            # active constraints before falling back to backtracking
            act = np.nonzero(lam > 0)[0]
            cand = None
            if act.size and np.all(np.isfinite(gc)):
                Ja = J[act]
                fix = u + step - Ja.T @ np.linalg.lstsq(Ja @ Ja.T, gc[act], rcond=None)[0]
                gf = F(fix)
                if accept(fix, gf, 1.0):
                    cand = fix
            t = 1.0
            while cand is None:
                t *= 0.5
                trial = u + t * step
                if accept(trial, F(trial), t) or t < 1e-9:
                    cand = trial
        move = float(np.linalg.norm(cand - u))
        u = cand
        vals, J = fd_jacobian(F, u)
        norms = np.linalg.norm(J, axis=1)
        viol = float(np.max(vals / np.where(norms > 0, norms, 1.0)))
        scale = max(1.0, float(np.linalg.norm(u)))
        if move <= 10 * opts.tol * scale and viol <= opts.tol * scale:
            ok = True
            break
    return u, vals, J, it, ok


def _system_form(model, expr: Intersection, opts) -> ReliabilityResult:
    root = StandardLSF(model, expr)
    children = list(expr.children)
    u, vals, grads, iters, ok = _joint_design_point(model, children, opts, root)
    norms = np.linalg.norm(grads, axis=1)
    scaled = vals / np.where(norms > 0, norms, 1.0)
    feasible = bool(np.all(scaled <= 1e-6 * max(1.0, np.linalg.norm(u))))
    active = [i for i in range(len(children)) if scaled[i] >= -_ACTIVE_TOL and norms[i] > 0]
    diag = {
        "kind": "parallel_system", "iterations": iters, "search_converged": ok,
        "design_point_u": u.tolist(),
        "design_point_x": {k: float(np.asarray(v)) for k, v in model.from_standard(u).items()},
        "beta_dp": float(np.linalg.norm(u)), "constraint_values": vals.tolist(), "active": active,
    }
    if not feasible or not active:
        diag["message"] = "joint design point search failed" if not feasible else "no active constraint"
        return ReliabilityResult("form", None, None, root.count, None, False, diag)
    alphas = -grads[active] / norms[active][:, None]
    betas = alphas @ u
    R = alphas @ alphas.T
    p = multinormal_upper(betas, R)
    norm = float(np.linalg.norm(u))
    diag.update({
        "alpha": (u / norm).tolist() if norm > 0 else alphas[0].tolist(),
        "component_alphas": alphas.tolist(), "component_betas": betas.tolist(),
        "correlation": R.tolist(), "origin_inside": bool(norm == 0.0),
    })
    return ReliabilityResult("form", p, beta_from_p(p), root.count, None, True, diag)


def form(model: ProbabilisticModel, expr: LimitStateExpression, opts: FormOptions | None = None) -> ReliabilityResult:
    """FORM estimate; a failed search returns ``converged=False`` and ``p=None``."""
    opts = opts or FormOptions()
    if isinstance(expr, Intersection) and len(expr.children) > 1:
        return _system_form(model, expr, opts)
    if isinstance(expr, Intersection):
        expr = expr.children[0]
    return _component_form(model, expr, opts)


def _reduced_curvatures(H, alpha):
    basis = tangent_basis(alpha)
    if basis.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(basis @ H @ basis.T)


def _curvatures(G, u, alpha, grad_norm):
    return _reduced_curvatures(fd_hessian(G, u) / grad_norm, alpha)


def sorm(model: ProbabilisticModel, expr: LimitStateExpression, form_result: ReliabilityResult) -> ReliabilityResult:
    """Breitung SORM at the FORM design point.

    For a parallel system each active component with positive
    component beta gets its own curvature correction (generalised index
    -Phi^-1 of its Breitung probability) before the multinormal step;
    components with beta <= 0 are left first-order.
    """
    if not form_result.converged:
        raise SolverError("SORM needs a converged FORM result")
    G = StandardLSF(model, expr)
    u = np.asarray(form_result.diagnostics["design_point_u"], float)
    diag: dict = {"kind": form_result.diagnostics["kind"], "form_beta": form_result.beta}
    if form_result.diagnostics["kind"] == "parallel_system":
        children = list(expr.children)
        active = form_result.diagnostics["active"]
        betas = np.array(form_result.diagnostics["component_betas"], float)
        R = np.array(form_result.diagnostics["correlation"], float)
        corrected, kappas_all, skipped = betas.copy(), [], []
        F = ComponentLSF(model, [children[i] for i in active], G.counter)
        _, J = fd_jacobian(F, u)
        Hs = fd_hessian(F, u)
        for k, i in enumerate(active):
            ng = float(np.linalg.norm(J[k]))
            kap = _reduced_curvatures(Hs[k] / ng, -J[k] / ng)
            kappas_all.append(kap.tolist())
            if betas[k] <= 0:
                skipped.append(i)
                continue
            p_i, ok = breitung(betas[k], kap)
            if not ok:
                diag.update({"message": f"degenerate curvature on component {i}", "curvatures": kappas_all})
                return ReliabilityResult("sorm", None, None, G.count + form_result.n_evals, None, False, diag)
            corrected[k] = beta_from_p(p_i)
        p = multinormal_upper(corrected, R)
        diag.update({"curvatures": kappas_all, "component_betas_sorm": corrected.tolist(),
                     "first_order_components": skipped})
        return ReliabilityResult("sorm", p, beta_from_p(p), G.count + form_result.n_evals, None, True, diag)

    beta = form_result.beta
    if beta is None or beta <= 0:
        diag["message"] = "SORM requires a positive FORM reliability index"
        return ReliabilityResult("sorm", None, None, form_result.n_evals, None, False, diag)
    g, grad = fd_gradient(G, u)
    ng = float(np.linalg.norm(grad))
    alpha = -grad / ng
    kap = _curvatures(G, u, alpha, ng)
    diag["curvatures"] = kap.tolist()
    if not np.all(np.isfinite(kap)):
        diag["message"] = "non-finite curvature"
        return ReliabilityResult("sorm", None, None, G.count + form_result.n_evals, None, False, diag)
    p, ok = breitung(beta, kap)
    if not ok:
        diag["message"] = "1 + beta*kappa <= 0: Breitung formula undefined"
        return ReliabilityResult("sorm", None, None, G.count + form_result.n_evals, None, False, diag)
    return ReliabilityResult("sorm", p, beta_from_p(p), G.count + form_result.n_evals, None, True, diag)
