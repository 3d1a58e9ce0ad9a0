"""Counter-based standard normal streams.

Rows are generated in fixed-size blocks; block ``b`` of stream ``s`` under
seed ``k`` comes from a Philox generator keyed by (k, s) whose counter starts
at ``b``.  Row ``i`` is therefore a pure function of (seed, stream, i, dim),
independent of how many rows are requested or in which order blocks are
produced.
"""
import numpy as np

BLOCK = 4096

__all__ = ["BLOCK", "standard_normal_rows", "block_generator", "derive_seed"]


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    key = (int(seed) & ((1 << 64) - 1)) | (int(stream) << 64)
    bitgen = np.random.Philox(key=key, counter=[0, 0, 0, int(block)])
    return np.random.Generator(bitgen)


def standard_normal_rows(seed: int, start: int, count: int, dim: int, stream: int = 0) -> np.ndarray:
    """Rows ``start .. start+count-1`` of the (seed, stream) standard normal table."""
    out = np.empty((count, dim))
    if count == 0 or dim == 0:
        return out
    first, last = start // BLOCK, (start + count - 1) // BLOCK
    pos = 0
    for b in range(first, last + 1):
        rows = block_generator(seed, b, stream).standard_normal((BLOCK, dim))
        lo = max(start - b * BLOCK, 0)
        hi = min(start + count - b * BLOCK, BLOCK)
        out[pos:pos + hi - lo] = rows[lo:hi]
        pos += hi - lo
    return out


def derive_seed(seed: int, *tags: int) -> int:
    """Independent child seed for a sub-computation (e.g. numerator vs denominator)."""
    ss = np.random.SeedSequence([int(seed), *map(int, tags)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
