#!/usr/bin/env python3
"""Benchmark the Monte-Carlo sampling kernel: numba @njit vs pure numpy.

Run:  python benchmarks/bench_kernels.py [--samples 200000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from epurify import (
    HaarSampler,
    PurificationProblem,
    ising_all_to_all,
    solve_max_success,
    spectral_decompose,
    structural_operators,
)
from epurify._kernels import mc_samples_numba, mc_samples_numpy, numba_requested
from epurify.montecarlo import choi_reductions


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--n", type=int, default=3, choices=(1, 2, 3, 4))
    args = parser.parse_args()

    gamma = 0.5
    h = ising_all_to_all(args.n, -0.5, -0.3)
    es = spectral_decompose(h)
    s = structural_operators(PurificationProblem(d=2, n=args.n, gamma=gamma, energy=es))
    sol = solve_max_success(s)
    g4, rp = choi_reductions(sol.choi_star, s.in_dims, s.out_dims, 0)
    prefix = np.eye(1, dtype=np.complex128)
    psis = HaarSampler(2, seed=1).state_vectors(args.samples)

    t_np = timeit(lambda: mc_samples_numpy(psis, gamma, args.n, prefix, g4, rp))
    print(f"numpy  : {t_np:.3f} s  ({args.samples / t_np / 1e6:.2f} Msamples/s)")

    if mc_samples_numba is None:
        print("numba  : not installed")
        return
    if not numba_requested():
        print("numba  : disabled via EPURIFY_NO_NUMBA")
    mc_samples_numba(psis[:10], gamma, args.n, prefix, g4, rp)  # compile outside the timing
    t_nb = timeit(lambda: mc_samples_numba(psis, gamma, args.n, prefix, g4, rp))
    print(f"numba  : {t_nb:.3f} s  ({args.samples / t_nb / 1e6:.2f} Msamples/s)")
    print(f"speedup: {t_np / t_nb:.2f}x")

    f1, p1 = mc_samples_numpy(psis[:1000], gamma, args.n, prefix, g4, rp)
    f2, p2 = mc_samples_numba(psis[:1000], gamma, args.n, prefix, g4, rp)
    print(f"agreement: |df| <= {np.abs(f1 - f2).max():.2e}, |dp| <= {np.abs(p1 - p2).max():.2e}")


if __name__ == "__main__":
    main()
