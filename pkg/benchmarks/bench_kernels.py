"""Benchmark the numba kernels against their pure-numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--range 0:999] [--mds-n 300]

Both paths are run on identical inputs and checked for agreement; timings
include a warm-up call so numba's JIT compilation is not billed to the
measured run.
"""

import argparse
import time

import numpy as np

from numsim import metrics
from numsim.accel import NUMBA_ENABLED
from numsim.embedding import smacof


def timed(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_levenshtein(n_min, n_max):
    kind = metrics.DistanceKind(metrics.LEVENSHTEIN)
    n = n_max - n_min + 1
    print(f"levenshtein grid over [{n_min}, {n_max}] ({n * n} entries)")
    if NUMBA_ENABLED:
        metrics.distance_grid(n_min, min(n_min + 10, n_max), kind, use_numba=True)  # warm-up
        g_nb, t_nb = timed(lambda: metrics.distance_grid(n_min, n_max, kind, use_numba=True))
        print(f"  numba : {t_nb * 1e3:9.1f} ms")
    else:
        g_nb = None
        print("  numba : unavailable")
    g_np, t_np = timed(lambda: metrics.distance_grid(n_min, n_max, kind, use_numba=False))
    print(f"  numpy : {t_np * 1e3:9.1f} ms")
    if g_nb is not None:
        assert np.array_equal(g_nb.values, g_np.values), "kernel paths disagree"
        print(f"  agree, speedup x{t_np / t_nb:.1f}")


def bench_smacof(n):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(n, 4))
    diff = pts[:, None, :] - pts[None, :, :]
    delta = np.sqrt((diff * diff).sum(axis=2))
    print(f"smacof on a {n}x{n} dissimilarity matrix (100 iterations)")
    if NUMBA_ENABLED:
        smacof(delta[:10, :10], seed=0, max_iters=5, use_numba=True)  # warm-up
        s_nb, t_nb = timed(lambda: smacof(delta, seed=0, max_iters=100, tol=0.0, use_numba=True))
        print(f"  numba : {t_nb * 1e3:9.1f} ms")
    else:
        s_nb = None
        print("  numba : unavailable")
    s_np, t_np = timed(lambda: smacof(delta, seed=0, max_iters=100, tol=0.0, use_numba=False))
    print(f"  numpy : {t_np * 1e3:9.1f} ms")
    if s_nb is not None:
        assert np.allclose(s_nb.points, s_np.points, atol=1e-10), "kernel paths disagree"
        print(f"  agree, speedup x{t_np / t_nb:.1f}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--range", default="0:999")
    parser.add_argument("--mds-n", type=int, default=300)
    args = parser.parse_args()
    lo, _, hi = args.range.partition(":")
    print(f"numba enabled: {NUMBA_ENABLED}")
    bench_levenshtein(int(lo), int(hi))
    bench_smacof(args.mds_n)


if __name__ == "__main__":
    main()
