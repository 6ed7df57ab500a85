#!/usr/bin/env python3
"""Build and cache the jump-count moment table.

The table maps the thinned Poisson mean to the expected number of
standing-price jumps per auction; the arrival-rate estimator inverts it.
Building at full Monte Carlo precision takes a while, so the result is
written to a CSV cache that the CLI and library reuse.
"""

import argparse

import numpy as np

from secondprice import build_g_table, save_g_table


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max", type=float, default=5.0,
                        help="largest tabulated thinned mean")
    parser.add_argument("--step", type=float, default=0.1)
    parser.add_argument("--mc-reps", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--out", default="gtable.csv")
    args = parser.parse_args()

    grid = np.arange(0.0, args.max + 0.5 * args.step, args.step)
    table = build_g_table(grid, args.mc_reps, args.seed)
    save_g_table(table, args.out)
    print(f"wrote {args.out}: {len(grid)} grid points, "
          f"{args.mc_reps} replicates each, top value {table.gvals[-1]:.4f}")


if __name__ == "__main__":
    main()
