"""End-to-end fit: arrival-rate estimate, initial CDF estimate, and the
coordinate-ascent maximizer (constrained near the lower boundary by
default), sharing one tabulated moment function across calls."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .arrival import GTable, build_g_table, estimate_lambda
from .errors import NumericalError
from .initial import (LowReserveSelection, SpliceAnchors, combine_initial,
                      compute_splice_anchors, estimate_f_fp, estimate_f_sp,
                      initial_theta, select_low_reserve)
from .mle import (AscentResult, LikelihoodContext, coordinate_ascent,
                  reconstruct_cdf)
from .model import (MonotoneCurve, ObservedDataset, PooledData, ThetaVector,
                    pool)

DEFAULT_Q = 0.25
# Monte Carlo replicates per moment-table grid point used when no table
# is supplied.  Error analysis: at lam*tau near 100 the table's argument
# error is about 50 * sd(2 H_N) / sqrt(reps) ~ 10 / sqrt(reps), far below
# the rate tolerances of interest at this setting.
DEFAULT_TABLE_REPS = 100_000
DEFAULT_TABLE_SEED = 20240601
_THETA_CLIP = 1e-6

_table_lock = threading.Lock()
_shared_tables: dict = {}


def default_g_table(mc_reps: int = DEFAULT_TABLE_REPS,
                    seed: int = DEFAULT_TABLE_SEED) -> GTable:
    """Process-wide shared moment table (initial range [0, 5], spacing
    0.1; queries beyond the range trigger automatic extension)."""
    key = (int(mc_reps), int(seed))
    with _table_lock:
        if key not in _shared_tables:
            _shared_tables[key] = build_g_table(
                np.arange(0.0, 5.0 + 0.05, 0.1), mc_reps, seed)
        return _shared_tables[key]


def _remember_table(table: GTable) -> None:
    # keep extended tables so later fits skip the re-extension cost
    key = (table.mc_reps, table.seed)
    with _table_lock:
        cur = _shared_tables.get(key)
        if cur is None or table.grid[-1] > cur.grid[-1]:
            _shared_tables[key] = table


def default_epsilon(dataset: ObservedDataset) -> float:
    """Half-width of the low-reserve window: 1% of the median final
    selling price, floored at 0.01."""
    med = float(np.median([a.final_price for a in dataset.auctions]))
    return max(0.01, 0.01 * med)


def clip_theta0(theta0: ThetaVector, ctx: LikelihoodContext,
                clip: float = _THETA_CLIP) -> ThetaVector:
    """Push the starting point strictly inside the feasible region.

    The interpolated initial estimate can be flat (ratio exactly 1 at a
    jump position) or saturated at 1 (ratio 0 ahead of later jumps);
    either makes the objective -inf, so those entries are nudged by
    ``clip`` before the ascent starts.
    """
    t = np.asarray(theta0.theta, dtype=float).copy()
    t[ctx.is_jump] = np.minimum(t[ctx.is_jump], 1.0 - clip)
    pos = ctx.coef > 0
    t[pos] = np.maximum(t[pos], clip)
    return ThetaVector(t)


@dataclass(frozen=True)
class FitResult:
    """Everything the downstream consumers need from one fit."""

    lambda_hat: float
    selection: LowReserveSelection
    anchors: SpliceAnchors
    f_init: MonotoneCurve
    theta0: ThetaVector
    pooled: PooledData
    ascent: AscentResult
    cdf: MonotoneCurve
    constrained: bool


def fit_initial(dataset: ObservedDataset, q: float = DEFAULT_Q,
                epsilon: float = None, table: GTable = None):
    """Arrival rate plus the spliced initial CDF estimate.

    Returns (lambda_hat, selection, anchors, f_init).
    """
    if epsilon is None:
        epsilon = default_epsilon(dataset)
    if table is None:
        table = default_g_table()
    selection = select_low_reserve(dataset, q, epsilon)
    lambda_hat = estimate_lambda(dataset, table, selection.V)
    _remember_table(table)
    if lambda_hat <= 0:
        raise NumericalError(
            "arrival-rate estimate is zero (no standing-price jumps in the "
            "low-reserve auctions)")
    f_sp = estimate_f_sp(dataset, selection, lambda_hat)
    f_fp = estimate_f_fp(dataset, selection)
    anchors = compute_splice_anchors(f_fp, f_sp)
    _, f_init = combine_initial(f_fp, f_sp, anchors)
    return lambda_hat, selection, anchors, f_init


def fit(dataset: ObservedDataset, q: float = DEFAULT_Q, epsilon: float = None,
        table: GTable = None, tol: float = 1e-8, max_sweeps: int = 10000,
        constrained: bool = True, log_path=None) -> FitResult:
    """Full pipeline on one dataset.

    ``constrained=True`` freezes the coordinates at and below the
    smallest pooled jump price at their initial-estimate values, which
    corrects the likelihood's tendency to overshoot near the lower
    boundary; ``constrained=False`` updates every coordinate.
    """
    pooled = pool(dataset)
    lambda_hat, selection, anchors, f_init = fit_initial(
        dataset, q=q, epsilon=epsilon, table=table)
    ctx = LikelihoodContext(pooled, lambda_hat)
    theta0 = clip_theta0(initial_theta(f_init, pooled.z), ctx)
    constrain = constrained and pooled.ell > 0
    ascent = coordinate_ascent(ctx, theta0, tol=tol, max_sweeps=max_sweeps,
                               constrained=constrain, log_path=log_path)
    cdf = reconstruct_cdf(ascent.theta, pooled.z)
    return FitResult(lambda_hat=lambda_hat, selection=selection,
                     anchors=anchors, f_init=f_init, theta0=theta0,
                     pooled=pooled, ascent=ascent, cdf=cdf,
                     constrained=constrain)
