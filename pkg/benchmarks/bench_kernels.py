"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from mtebounds import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bounds_grid_case(rng, reps=200, pairs=3, grid=401):
    v = np.linspace(0, 1, grid)
    dp_lo = rng.uniform(0.05, 0.4, (reps, pairs))
    dp_hi = dp_lo + rng.uniform(0, 0.2, (reps, pairs))
    w_lo = rng.uniform(0, 0.5, (reps, pairs))
    w_hi = w_lo + rng.uniform(0, 0.4, (reps, pairs))
    dy = rng.normal(0, 0.1, (reps, pairs))
    scale = np.full(reps, 2.0)
    return lambda impl: impl(v, dy, dp_lo, dp_hi, w_lo, w_hi, scale)


def strata_case(rng, n=200_000, k=3):
    codes = rng.integers(0, k, n).astype(np.int64)
    y = rng.normal(size=n)
    d = rng.integers(0, 2, n).astype(np.float64)
    idx = rng.integers(0, n, n).astype(np.int64)
    return lambda impl: impl(idx, codes, y, d, k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = [
        ("bounds_grid 200x401x3", bounds_grid_case(rng), _kernels.nb_bounds_grid, _kernels.np_bounds_grid),
        ("resampled_strata_sums n=200k", strata_case(rng), _kernels.nb_resampled_strata_sums,
         _kernels.np_resampled_strata_sums),
    ]
    print(f"numba available: {_kernels.numba is not None}; active backend: {_kernels.backend()}")
    print(f"{'kernel':<32}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, call, nb, npy in cases:
        for a, b in zip(call(nb), call(npy)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        t_nb = best_of(lambda: call(nb), args.repeat)
        t_np = best_of(lambda: call(npy), args.repeat)
        print(f"{name:<32}{1e3 * t_nb:>10.2f}{1e3 * t_np:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
