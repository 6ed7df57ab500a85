"""Generalized-method-of-moments estimation of the bidder arrival rate.

The expected number of standing-price changes in one auction is a
strictly increasing function ``g`` of the thinned-arrival Poisson mean;
``g`` is tabulated by Monte Carlo, isotonically projected, and inverted
by monotone interpolation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import isotonic_regression

from .errors import NumericalError, ValidationError
from .model import ObservedDataset

_MAX_DOUBLINGS = 24


def conditional_mean_jumps(n: int) -> float:
    """E[number of standing-price changes | n bidders above the reserve]:
    0 for n <= 1, else 2 * sum_{i=2}^{n} 1/i."""
    if n < 0:
        raise ValidationError("bidder count must be non-negative")
    if n <= 1:
        return 0.0
    return 2.0 * float(np.sum(1.0 / np.arange(2, n + 1)))


@dataclass(frozen=True)
class GTable:
    """Tabulated moment function with monotone inverse lookup."""

    grid: np.ndarray
    gvals: np.ndarray
    mc_reps: int
    seed: int

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        gvals = np.asarray(self.gvals, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gvals", gvals)
        if len(grid) < 2 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
            raise ValidationError("grid must be ascending and non-negative")
        if np.any(np.diff(gvals) < 0):
            raise ValidationError("g values must be non-decreasing")

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])


def build_g_table(grid, mc_reps: int, seed: int) -> GTable:
    """Estimate g on a grid by Monte Carlo.

    Only the bidder count N ~ Poisson(x) is sampled; the exact
    conditional mean of the jump count given N is applied, which removes
    the within-auction sampling variance.  The result is isotonically
    projected and g(0) = 0 is pinned exactly.
    """
    grid = np.asarray(grid, dtype=float)
    if mc_reps < 1:
        raise ValidationError("mc_reps must be >= 1")
    gvals = np.zeros(len(grid))
    for i, x in enumerate(grid):
        if x == 0.0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), i)))
        n = rng.poisson(x, mc_reps)
        nmax = int(n.max())
        # harmonic[k] = sum_{i=2}^{k} 1/i
        harmonic = np.concatenate(([0.0, 0.0], np.cumsum(1.0 / np.arange(2, nmax + 1))))
        gvals[i] = float(np.mean(2.0 * harmonic[n]))
    gvals = isotonic_regression(gvals).x
    if grid[0] == 0.0:
        gvals[0] = 0.0
    return GTable(grid, gvals, int(mc_reps), int(seed))


def extend_to_cover(table: GTable, y: float) -> GTable:
    """Double the grid range (same spacing, mc_reps, seed) until the
    tabulated values cover y."""
    out = table
    for _ in range(_MAX_DOUBLINGS):
        if out.gvals[-1] >= y:
            return out
        new_max = max(2.0 * out.grid[-1], out.spacing)
        grid = np.arange(0.0, new_max + 0.5 * table.spacing, table.spacing)
        out = build_g_table(grid, table.mc_reps, table.seed)
    raise NumericalError(f"could not extend g table to cover y={y}")


def g_eval(table: GTable, x) -> np.ndarray:
    return np.interp(x, table.grid, table.gvals)


def g_inverse(table: GTable, y: float) -> float:
    """Monotone linear-interpolation inverse of the tabulated g,
    auto-extending the table range when y lies beyond it."""
    if y < 0:
        raise ValidationError("mean jump count must be non-negative")
    if y > table.gvals[-1]:
        table = extend_to_cover(table, y)
    return float(np.interp(y, table.gvals, table.grid))


def estimate_lambda(dataset: ObservedDataset, table: GTable,
                    low_reserve_set) -> float:
    """Arrival-rate estimate from the mean jump count over auctions with
    negligible reserve prices (F at those reserves is treated as 0)."""
    idx = sorted(low_reserve_set)
    if not idx:
        raise NumericalError("low-reserve auction set is empty; relax (q, epsilon)")
    mean_jumps = float(np.mean([dataset.auctions[k].m for k in idx]))
    return g_inverse(table, mean_jumps) / dataset.tau


# -- on-disk cache ------------------------------------------------------

def save_g_table(table: GTable, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# mc_reps={table.mc_reps}\n# seed={table.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "g"])
        for x, g in zip(table.grid, table.gvals):
            writer.writerow([repr(float(x)), repr(float(g))])


def load_g_table(path) -> GTable:
    path = Path(path)
    meta = {}
    rows = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, val = line[1:].split("=")
                meta[key.strip()] = int(val)
            elif line and not line.startswith("x,"):
                x, g = line.split(",")
                rows.append((float(x), float(g)))
    grid = np.array([r[0] for r in rows])
    gvals = np.array([r[1] for r in rows])
    return GTable(grid, gvals, meta["mc_reps"], meta["seed"])


def cached_g_table(path, grid, mc_reps: int, seed: int) -> GTable:
    """Load the cached table when its parameters match, else rebuild and
    overwrite the cache."""
    path = Path(path)
    grid = np.asarray(grid, dtype=float)
    if path.exists():
        try:
            table = load_g_table(path)
        except (ValueError, KeyError, ValidationError):
            table = None
        if (table is not None and table.mc_reps == mc_reps and table.seed == seed
                and len(table.grid) >= len(grid)
                and np.allclose(table.grid[: len(grid)], grid)):
            return table
    table = build_g_table(grid, mc_reps, seed)
    save_g_table(table, path)
    return table
