"""Multinormal orthant probabilities by Genz's separation of variables.

Quasi-random (scrambled Sobol, fixed seed) so results are reproducible to
the last bit; the product form keeps relative accuracy for tiny
probabilities.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import qmc

from .. import kernels

__all__ = ["mvn_lower"]

_TINY = 1e-300


def _pivoted_cholesky(R, c):
    # Reorder so the most restrictive limits come first; skip near-singular pivots.
    m = len(c)
    R = R.copy()
    c = c.copy()
    L = np.zeros((m, m))
    for k in range(m):
        best, best_p = k, np.inf
        for i in range(k, m):
            var = R[i, i] - L[i, :k] @ L[i, :k]
            if var <= 1e-12:
                cond_p = 0.0 if (c[i] - 0.0) < 0 else 1.0
            else:
                cond_p = kernels.norm_cdf(np.asarray(c[i] / np.sqrt(var)))
            if cond_p < best_p:
                best, best_p = i, float(cond_p)
        if best != k:
            R[[k, best]] = R[[best, k]]
            R[:, [k, best]] = R[:, [best, k]]
            L[[k, best]] = L[[best, k]]
            c[[k, best]] = c[[best, k]]
        var = R[k, k] - L[k, :k] @ L[k, :k]
        L[k, k] = np.sqrt(var) if var > 1e-12 else 0.0
        for i in range(k + 1, m):
            L[i, k] = (R[i, k] - L[i, :k] @ L[k, :k]) / L[k, k] if L[k, k] > 0 else 0.0
    return L, c


def mvn_lower(c, R, n_points: int = 2 ** 14, n_shifts: int = 8, seed: int = 20240531):
    """P[Y <= c] for Y ~ N(0, R) with unit diagonal; returns (p, standard error)."""
    c = np.asarray(c, float)
    R = np.asarray(R, float)
    m = c.size
    if m == 1:
        return float(kernels.norm_cdf(c)[0]), 0.0
    L, c = _pivoted_cholesky(R, c)
    estimates = []
    for s in range(n_shifts):
        w = qmc.Sobol(m - 1, scramble=True, seed=seed + s).random(n_points)
        f = np.ones(n_points)
        y = np.zeros((n_points, m))
        for i in range(m):
            shift = y[:, :i] @ L[i, :i]
            if L[i, i] > 0:
                e = kernels.norm_cdf((c[i] - shift) / L[i, i])
            else:
                e = (c[i] - shift >= 0).astype(float)
            f = f * e
            if i < m - 1:
                if L[i, i] > 0:
                    q = np.clip(w[:, i] * e, _TINY, 1.0 - 1e-16)
                    y[:, i] = kernels.norm_ppf(q)
                else:
                    y[:, i] = 0.0
        estimates.append(f.mean())
    est = np.array(estimates)
    return float(est.mean()), float(est.std(ddof=1) / np.sqrt(n_shifts))
