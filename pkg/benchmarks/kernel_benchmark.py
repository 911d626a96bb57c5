#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the four resampling kernels on sizes typical of exact and
Monte-Carlo runs, checks that both flavors agree, and prints speedups.
Run from the repository root:

    python benchmarks/kernel_benchmark.py
"""

import math
import time

import numpy as np

from clusrank._kernels import numba_impls, numpy_impls


def timed(fn, *args, repeat=5):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    nb = numba_impls()
    if nb is None:
        raise SystemExit("numba is not installed; nothing to compare")
    np_impl = numpy_impls()
    rng = np.random.default_rng(0)

    cases = []

    terms22 = rng.normal(0, 5, 22)
    cases.append(("signflip exhaustive, N=22 (4.2M flips)",
                  "signflip_sums_exhaustive", (terms22,)))

    terms50 = rng.normal(0, 5, 50)
    u_flip = rng.random((200_000, 50))
    cases.append(("signflip Monte-Carlo, N=50, B=200k",
                  "signflip_sums_mc", (terms50, u_flip)))

    values24 = rng.normal(50, 10, 24)
    cases.append((f"subset exhaustive, C(24,12)={math.comb(24, 12):,}",
                  "subset_sums_exhaustive", (values24, 12, math.comb(24, 12))))

    values50 = rng.normal(50, 10, 50)
    u_sub = rng.random((200_000, 50))
    cases.append(("subset Monte-Carlo, n=50, m=25, B=200k",
                  "subset_sums_mc", (values50, 25, u_sub)))

    # warm up the JIT outside the timings
    for _, name, args in cases:
        nb[name](*args)

    header = f"{'kernel':<44} {'numpy':>10} {'numba':>10} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, name, args in cases:
        t_np, r_np = timed(np_impl[name], *args)
        t_nb, r_nb = timed(nb[name], *args)
        assert np.allclose(np.sort(r_np), np.sort(r_nb), rtol=1e-9), label
        print(f"{label:<44} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
