"""Regenerate src/strucbreak/data/critical_values.csv by simulation.

Usage: python scripts/generate_critical_values.py [--reps 10000] [--precise-reps 100000]

Entries for trimming 0.15 and q <= 3 use --precise-reps replications; all
others use --reps. Intermediate draws are cached under --cache so an
interrupted run can resume.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from strucbreak.core import SUPPORTED_TRIMMING
from strucbreak.critical_values import simulate_limit_draws, table_rows_from_draws, write_table

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--precise-reps", type=int, default=100000)
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--qmax", type=int, default=10)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--cache", type=Path, default=ROOT / ".cv_cache")
    p.add_argument("--out", type=Path, default=ROOT / "src" / "strucbreak" / "data" / "critical_values.csv")
    args = p.parse_args()
    args.cache.mkdir(exist_ok=True)

    rows = []
    for q in range(1, args.qmax + 1):
        for eps in SUPPORTED_TRIMMING:
            reps = args.precise_reps if (eps == 0.15 and q <= 3) else args.reps
            f = args.cache / f"q{q}_e{int(eps * 100):02d}_r{reps}_g{args.grid}.npy"
            if f.exists():
                draws = np.load(f)
            else:
                t0 = time.time()
                seed = [args.seed, q, int(round(eps * 100))]
                draws = simulate_limit_draws(q, eps, reps, grid=args.grid, seed=seed)
                np.save(f, draws)
                print(f"q={q} eps={eps} reps={reps}: {time.time() - t0:.0f}s", flush=True)
            rows.extend(table_rows_from_draws(draws, q, eps, args.grid))
    header = [
        "Quantiles of the limiting null distributions of sup F(s), UDmax, WDmax and F(s+1|s).",
        f"Simulated: grid={args.grid}, base seed={args.seed}; reps per (q, trimming) in the reps column.",
        "kind: supF (s = breaks), Dmax/WDmax (s = max breaks), FnextGivenS (s = breaks under the null).",
        "alpha is the significance level; mc_se is an order-statistic Monte Carlo standard error.",
    ]
    write_table(rows, args.out, header)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
