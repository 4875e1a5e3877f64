#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy/python fallbacks.

The package selects the fallback automatically when AZTECENV_NO_NUMBA=1 is
set (or numba is missing); this script times both implementations directly
on the two hot paths and prints the speedups.
"""

import time

import numpy as np

from aztecenv import _kernels


def bench(label, fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    print(f"{label:>42}: {best * 1e3:9.2f} ms")
    return best


def main():
    rng = np.random.default_rng(0)

    print("== dual-insertion shapes (256 samples, 100 x 100 matrix) ==")
    a = np.ascontiguousarray(rng.uniform(0.2, 0.5, (100, 100)))
    u = rng.random((256, 100, 100))
    if _kernels.USING_NUMBA:
        _kernels._rsk_shapes_batch_nb(u[:2], a)  # compile
        t_nb = bench("numba", _kernels._rsk_shapes_batch_nb, u, a)
    else:
        t_nb = None
        print("numba unavailable or disabled; skipping the jitted path")
    t_py = bench("python fallback", _kernels._rsk_shapes_batch_py, u, a)
    if t_nb:
        print(f"{'speedup':>42}: {t_py / t_nb:9.1f} x")

    print("== log-derivative ratio power sums (4096 nodes, 400 points, r <= 6) ==")
    beta = rng.uniform(0.2, 0.8, 400)
    nodes = 0.5 * np.exp(2j * np.pi * np.arange(4096) / 4096)
    if _kernels.USING_NUMBA:
        _kernels._beta_ratio_power_sums_nb(beta, nodes[:4], 6)
        t_nb = bench("numba", _kernels._beta_ratio_power_sums_nb, beta, nodes, 6)
    else:
        t_nb = None
    t_np = bench("numpy fallback", _kernels._beta_ratio_power_sums_np, beta, nodes, 6)
    if t_nb:
        print(f"{'speedup':>42}: {t_np / t_nb:9.1f} x")

    # both paths must agree exactly
    s1, o1 = _kernels._rsk_shapes_batch_py(u[:16], a)
    s2, o2 = _kernels.rsk_shapes_batch(u[:16], a)
    assert np.array_equal(s1, s2) and np.array_equal(o1, o2)
    print("paths agree on a 16-sample check")


if __name__ == "__main__":
    main()
