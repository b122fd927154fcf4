"""Time the numba and numpy kernels on the same inputs.

Usage: python benchmarks/bench_kernels.py [--T 200] [--N 1] [--repeat 5]

Both implementations are imported directly, so the STRUCBREAK_BACKEND flag
does not matter here. The first numba call (compilation or cache load) is
excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from strucbreak import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--nz", type=int, default=0, help="unit-specific breaking columns")
    p.add_argument("--s", type=int, default=5)
    p.add_argument("--grid", type=int, default=500, help="grid for the limit functional")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    A = rng.standard_normal((args.N, args.T, args.nz + args.q + 1))
    h = max(2, int(np.ceil(0.15 * args.T)))
    cost, _, _ = kernels.segment_costs_np(A, args.nz, h)
    e = rng.standard_normal((args.grid, args.q))
    hg = int(np.ceil(0.15 * args.grid))
    buf = np.empty((args.grid, args.grid))

    cases = [
        ("segment_costs", lambda: kernels.segment_costs_nb(A, args.nz, h),
         lambda: kernels.segment_costs_np(A, args.nz, h)),
        ("dp_table", lambda: kernels.dp_table_nb(cost, args.s, h),
         lambda: kernels.dp_table_np(cost, args.s, h)),
        ("limit_sup_values", lambda: kernels.limit_sup_values_nb(e, hg, args.s, buf),
         lambda: kernels.limit_sup_values_np(e, hg, args.s)),
    ]
    print(f"T={args.T} N={args.N} q={args.q} nz={args.nz} s={args.s} grid={args.grid}")
    print(f"{'kernel':<18}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for name, nb, npy in cases:
        nb()  # compile or load from cache
        t_nb = best_of(nb, args.repeat)
        t_np = best_of(npy, args.repeat)
        print(f"{name:<18}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
