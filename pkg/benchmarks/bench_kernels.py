"""Compiled versus pure-Python kernels.

    python benchmarks/bench_kernels.py [--size N] [--repeat R]

Prints the best-of-R time per call for each kernel and backend, the
speed-up, and the largest absolute difference between the two outputs.
"""
import argparse
import timeit

import numpy as np

from relup import _kernels_py

try:
    from relup import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(size, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 3.0, size)
    p = rng.uniform(1e-12, 1 - 1e-12, size)
    a0 = rng.exponential(1.0, size)
    dS = rng.normal(60.0, 10.0, size)
    lnC = rng.normal(-33.0, 0.47, size)
    m = rng.normal(3.5, 0.3, size)
    cl = rng.uniform(0.0, 1.0, size) ** 8
    return {
        "norm_cdf": lambda k: k.norm_cdf(x),
        "norm_pdf": lambda k: k.norm_pdf(x),
        "norm_ppf": lambda k: k.norm_ppf(p),
        "crack_size": lambda k: k.crack_size(a0, dS, lnC, m, 2.0e6),
        "equivalent_lsf": lambda k: k.equivalent_lsf(x, cl, 1e-300, float(np.nextafter(1.0, 0.0)))[0],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; run `pip install --no-build-isolation -e .` first")
        return 1
    print(f"{'kernel':16s} {'python ms':>10s} {'compiled ms':>12s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, call in _cases(args.size).items():
        t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: call(_compiled), number=1, repeat=args.repeat))
        a, b = np.asarray(call(_kernels_py)), np.asarray(call(_compiled))
        both = np.isfinite(a) & np.isfinite(b)
        diff = float(np.max(np.abs(a[both] - b[both]), initial=0.0))
        print(f"{name:16s} {1e3 * t_py:10.2f} {1e3 * t_c:12.2f} {t_py / t_c:9.1f} {diff:11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
