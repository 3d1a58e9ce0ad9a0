from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import kernels
from ..limit_state import LimitStateExpression
from ..probability import ProbabilisticModel


class SolverError(RuntimeError):
    """Numerical failure of a reliability method; ``diagnostics`` holds what is known."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def beta_from_p(p: float) -> float:
    if p <= 0.0:
        return math.inf
    if p >= 1.0:
        return -math.inf
    return -float(kernels.norm_ppf(np.asarray(p)))


def p_from_beta(beta: float) -> float:
    return float(kernels.norm_cdf(np.asarray(-beta)))


def thread_count() -> int:
    """Worker threads, capped by RELUP_THREADS (0 or unset = automatic)."""
    raw = os.environ.get("RELUP_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(8, os.cpu_count() or 1)
    return n


@dataclass
class ReliabilityResult:
    method: str
    p: float | None
    beta: float | None
    n_evals: int
    stderr: float | None = None
    converged: bool = True
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def cov(self) -> float | None:
        if self.stderr is None or not self.p:
            return None
        return self.stderr / self.p

    def to_dict(self) -> dict:
        return {
            "method": self.method, "p": self.p, "beta": self.beta, "stderr": self.stderr,
            "n_evals": self.n_evals, "converged": self.converged,
            "diagnostics": _plain(self.diagnostics),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class FormOptions:
    max_iter: int = 100
    tol: float = 1e-6
    u0: tuple | None = None


@dataclass(frozen=True)
class ApisOptions:
    n_ls: int = 500
    sampler_spread: float = 1.0
    t_max: float = 12.0
    tol: float = 1e-6
    density: str = "standard"
    mixture: float = 0.1
    surrogate_rays: int = 4000
    scan_cells: int = 0  # > 0: probe every ray on this many equal cells of [-t_max, t_max]

    def __post_init__(self):
        if self.n_ls < 1:
            raise ValueError("n_ls must be >= 1")
        if self.density not in ("standard", "surrogate"):
            raise ValueError("density must be 'standard' or 'surrogate'")
        if not 0.0 < self.mixture < 1.0:
            raise ValueError("mixture must lie in (0, 1)")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.scan_cells < 0:
            raise ValueError("scan_cells must be >= 0")
        if not self.sampler_spread > 0:
            raise ValueError("sampler_spread must be positive")


class EvalCounter:
    def __init__(self):
        self.value = 0
        self._lock = threading.Lock()

    def add(self, n: int):
        with self._lock:
            self.value += n


class StandardLSF:
    """G(u) = expr(T^-1(u)), counting evaluated points.

    Accepts a single point (shape (d,)) or a batch (shape (k, d)).
    """

    def __init__(self, model: ProbabilisticModel, expr: LimitStateExpression,
                 counter: EvalCounter | None = None):
        self.model = model
        self.expr = expr
        self.dim = model.dim
        self.counter = counter or EvalCounter()

    @property
    def count(self) -> int:
        return self.counter.value

    def __call__(self, u):
        u = np.asarray(u, float)
        out = np.asarray(self.expr.evaluate(self.model.from_standard(u)), float)
        if out.shape != u.shape[:-1]:
            out = np.broadcast_to(out, u.shape[:-1])
        self.counter.add(int(np.prod(u.shape[:-1])))
        return out if u.ndim > 1 else float(out)

    def child(self, expr: LimitStateExpression) -> "StandardLSF":
        """Same model and counter, different expression."""
        return StandardLSF(self.model, expr, self.counter)


class ComponentLSF:
    """Values of several expressions at shared points, counted once per point.

    Returns shape (..., m) for points of shape (..., d).
    """

    def __init__(self, model: ProbabilisticModel, exprs, counter: EvalCounter | None = None):
        self.model = model
        self.exprs = tuple(exprs)
        self.dim = model.dim
        self.counter = counter or EvalCounter()

    def __call__(self, u):
        u = np.asarray(u, float)
        x = self.model.from_standard(u)
        cols = [np.broadcast_to(np.asarray(e.evaluate(x), float), u.shape[:-1]) for e in self.exprs]
        self.counter.add(int(np.prod(u.shape[:-1])))
        return np.stack(cols, axis=-1)


def fd_jacobian(F, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference Jacobian of a vector function; returns (F(u), J) with J[i] = grad F_i."""
    d = u.size
    h = 1e-6 * (1.0 + np.linalg.norm(u))
    vals = np.asarray(F(np.vstack([u[None, :], u[None, :] + h * np.eye(d)])), float)
    return vals[0], ((vals[1:] - vals[0]) / h).T


def fd_gradient(G, u: np.ndarray, g0: float | None = None) -> tuple[float, np.ndarray]:
    """Forward differences with step 1e-6 (1 + |u|); one batched call."""
    d = u.size
    h = 1e-6 * (1.0 + np.linalg.norm(u))
    pts = np.vstack([u[None, :], u[None, :] + h * np.eye(d)]) if g0 is None else u[None, :] + h * np.eye(d)
    vals = np.asarray(G(pts), float)
    if g0 is None:
        g0, vals = float(vals[0]), vals[1:]
    return g0, (vals - g0) / h


def fd_hessian(G, u: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian from one batched evaluation.

    A vector-valued ``G`` (trailing axis m) gives an (m, d, d) stack.
    """
    d = u.size
    E = np.eye(d) * h
    pts = [u]
    for i in range(d):
        pts += [u + E[i], u - E[i]]
    for i in range(d):
        for j in range(i + 1, d):
            pts += [u + E[i] + E[j], u + E[i] - E[j], u - E[i] + E[j], u - E[i] - E[j]]
    vals = np.asarray(G(np.array(pts)), float)
    vector = vals.ndim == 2
    if not vector:
        vals = vals[:, None]
    g0 = vals[0]
    H = np.empty((vals.shape[1], d, d))
    for i in range(d):
        H[:, i, i] = (vals[1 + 2 * i] - 2 * g0 + vals[2 + 2 * i]) / (h * h)
    k = 1 + 2 * d
    for i in range(d):
        for j in range(i + 1, d):
            pp, pm, mp, mm = vals[k:k + 4]
            H[:, i, j] = H[:, j, i] = (pp - pm - mp + mm) / (4 * h * h)
            k += 4
    return H if vector else H[0]


def tangent_basis(alpha: np.ndarray) -> np.ndarray:
    """Rows: orthonormal basis of the hyperplane orthogonal to ``alpha``."""
    d = alpha.size
    if d == 1:
        return np.zeros((0, 1))
    _, _, vt = np.linalg.svd(alpha[None, :] / np.linalg.norm(alpha))
    return vt[1:]
