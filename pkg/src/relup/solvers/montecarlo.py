"""Crude Monte Carlo with shared samples across several domains."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from ..limit_state import LimitStateExpression
from ..probability import ProbabilisticModel
from ..rng import BLOCK
from ._common import ReliabilityResult, beta_from_p, thread_count

__all__ = ["monte_carlo", "monte_carlo_counts", "CHUNK"]

CHUNK = 16 * BLOCK


def _chunk_counts(model, exprs, combos, seed, start, count, stream):
    u = model.sample_standard(seed, count, start=start, stream=stream)
    x = model.from_standard(u)
    ind = [np.broadcast_to(np.asarray(e.indicator(x), bool), (count,)) for e in exprs]
    out = np.empty(len(combos), dtype=np.int64)
    for k, combo in enumerate(combos):
        mask = np.ones(count, bool)
        for i in combo:
            mask &= ind[i]
        out[k] = int(np.count_nonzero(mask))
    return out


def monte_carlo_counts(model: ProbabilisticModel, exprs: Sequence[LimitStateExpression],
                       combos: Sequence[Sequence[int]], n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Hit counts of each intersection ``combos[k]`` of ``exprs`` on one sample set.

    Sample i is a pure function of (seed, stream, i); chunks run on a thread
    pool and integer counts are summed, so results do not depend on the
    thread count.  An empty combo counts every sample.
    """
    exprs = list(exprs)
    combos = [tuple(c) for c in combos]
    starts = list(range(0, n, CHUNK))
    jobs = [(s, min(CHUNK, n - s)) for s in starts]
    workers = min(thread_count(), len(jobs))
    if workers <= 1:
        parts = [_chunk_counts(model, exprs, combos, seed, s, c, stream) for s, c in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _chunk_counts(model, exprs, combos, seed, j[0], j[1], stream), jobs))
    return np.sum(parts, axis=0)


def monte_carlo(model: ProbabilisticModel, expr: LimitStateExpression, n: int, seed: int) -> ReliabilityResult:
    if n < 100:
        raise ValueError("Monte Carlo needs n >= 100")
    hits = int(monte_carlo_counts(model, [expr], [(0,)], n, seed)[0])
    p = hits / n
    stderr = math.sqrt(p * (1 - p) / n)
    return ReliabilityResult("mc", p, beta_from_p(p), n, stderr, True, {"hits": hits, "n": n, "seed": seed})
