"""Initial CDF estimator built from final selling prices and first
non-reserve standing prices of low-reserve auctions, spliced and
interpolated, plus the starting parameter vector it induces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .model import (MonotoneCurve, ObservedDataset, ThetaVector, cdf_to_theta,
                    interpolate)

_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class LowReserveSelection:
    """Auctions whose reserves sit inside the chosen epsilon-window."""

    r_min: float
    q: float
    epsilon: float
    V: frozenset  # 0-based auction indices


@dataclass(frozen=True)
class SpliceAnchors:
    """Splice geometry combining the two partial estimators: p1 is the
    largest non-reserve standing price, p2 the smallest final selling
    price (both over the qualifying low-reserve auctions), c the splice
    point, and bridge_value the level the linear bridge reaches at p1."""

    p1: float
    p2: float
    c: float
    bridge_value: float

    def __post_init__(self):
        if self.c > min(self.p1, self.p2) + 1e-12:
            raise ValidationError("splice point must not exceed min(p1, p2)")
        if not 0.0 <= self.bridge_value <= 1.0:
            raise ValidationError("bridge value must lie in [0, 1]")


def select_low_reserve(dataset: ObservedDataset, q: float,
                       epsilon: float) -> LowReserveSelection:
    """Smallest non-negative r_min whose (r_min - eps, r_min + eps)
    window captures at least a q-fraction of the reserve prices."""
    if not 0.0 < q < 1.0 or epsilon <= 0:
        raise ValidationError("need 0 < q < 1 and epsilon > 0")
    reserves = np.array([a.reserve for a in dataset.auctions])
    order = np.argsort(reserves, kind="stable")
    rs = reserves[order]
    K = len(rs)
    m = max(1, math.ceil(q * K))
    best = None
    for i in range(K - m + 1):
        if rs[i + m - 1] - rs[i] >= 2 * epsilon:
            continue
        v = max(0.0, np.nextafter(rs[i + m - 1] - epsilon, np.inf))
        if v < rs[i] + epsilon and (best is None or v < best):
            best = v
    if best is None:
        raise NumericalError(
            "no reserve window achieves the requested q-fraction; relax (q, epsilon)")
    inside = (reserves > best - epsilon) & (reserves < best + epsilon)
    return LowReserveSelection(float(best), q, epsilon,
                               frozenset(int(k) for k in np.flatnonzero(inside)))


def g_lambda_cdf(eta: float, lambda_r: float, tau: float) -> float:
    """Conditional CDF of the final selling price (on the probability
    scale eta = F_r(x)) given at least two above-reserve bidders.

    Evaluated in an exponent-shifted form that is stable for large
    lambda_r * tau and exact at eta = 0 and eta = 1.
    """
    s = lambda_r * tau
    if s <= 0:
        raise ValidationError("lambda_r * tau must be positive")
    es = math.exp(-s)
    num = (s * (1.0 - eta) * (math.exp(s * (eta - 1.0)) - es)
           + math.exp(s * (eta - 1.0)) - (s * eta + 1.0) * es)
    den = 1.0 - es - s * es
    return num / den


def g_lambda_inverse(y: float, lambda_r: float, tau: float) -> float:
    """Bisection inverse of :func:`g_lambda_cdf` on eta in [0, 1]."""
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if g_lambda_cdf(mid, lambda_r, tau) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sold_above_reserve(dataset: ObservedDataset, selection: LowReserveSelection):
    return [k for k in sorted(selection.V) if dataset.auctions[k].m > 0]


def estimate_f_sp(dataset: ObservedDataset, selection: LowReserveSelection,
                  lambda_hat: float) -> MonotoneCurve:
    """Selling-price estimator: the inverse selling-price-CDF map applied
    to the empirical CDF of final selling prices over low-reserve
    auctions sold above the reserve."""
    ks = _sold_above_reserve(dataset, selection)
    if not ks:
        raise NumericalError(
            "no low-reserve auction sold above its reserve; relax (q, epsilon)")
    prices = np.sort([dataset.auctions[k].final_price for k in ks])
    n = len(prices)
    values = np.array([g_lambda_inverse((j + 1) / n, lambda_hat, dataset.tau)
                       for j in range(n)])
    return MonotoneCurve(prices, values, kind="step")


def estimate_f_fp(dataset: ObservedDataset,
                  selection: LowReserveSelection) -> MonotoneCurve:
    """First-price estimator: square-root inversion of the empirical CDF
    of first non-reserve standing prices (the min of the first two
    above-reserve valuations)."""
    ks = _sold_above_reserve(dataset, selection)
    if not ks:
        raise NumericalError("no low-reserve auction has a standing-price jump")
    prices = np.sort([dataset.auctions[k].jumps[0][0] for k in ks])
    n = len(prices)
    values = 1.0 - np.sqrt(1.0 - np.arange(1, n + 1) / n)
    return MonotoneCurve(prices, values, kind="step")


def compute_splice_anchors(f_fp: MonotoneCurve,
                           f_sp: MonotoneCurve) -> SpliceAnchors:
    """p1 = largest standing price among the qualifying auctions (the
    largest selling-price knot), p2 = smallest selling-price knot, c =
    largest first-price knot (or 0) at or below min(p1, p2) where the
    first-price estimate does not exceed the bridge target, which is the
    selling-price estimate at p1."""
    p1 = float(f_sp.knots[-1])
    p2 = float(f_sp.knots[0])
    target = float(f_sp(p1))
    cap = min(p1, p2)
    candidates = [0.0] + [float(x) for x in f_fp.knots if x <= cap]
    c = max(x for x in candidates if float(f_fp(x)) <= target)
    return SpliceAnchors(p1, p2, c, target)


def combine_initial(f_fp: MonotoneCurve, f_sp: MonotoneCurve,
                    anchors: SpliceAnchors):
    """Splice the two partial estimators: first-price estimate below the
    splice point, a linear bridge up to p1, selling-price estimate above.

    Returns ``(step_estimate, continuous_estimate)`` where the continuous
    version is the linear interpolation anchored at (0, 0).
    """
    p1, c = anchors.p1, anchors.c
    fc = float(f_fp(c))
    fp1 = anchors.bridge_value
    knots = sorted({float(x) for x in f_fp.knots if x <= c}
                   | {c, p1}
                   | {float(x) for x in f_sp.knots if x > p1})
    values = []
    for x in knots:
        if x <= c:
            values.append(float(f_fp(x)))
        elif x <= p1:
            if p1 == c:
                values.append(fp1)
            else:
                values.append(fc + (fp1 - fc) / (p1 - c) * (x - c))
        else:
            values.append(float(f_sp(x)))
    step = MonotoneCurve(np.asarray(knots), np.asarray(values), kind="step")
    return step, interpolate(step, anchor_zero=True)


def initial_theta(f_init: MonotoneCurve, z: np.ndarray) -> ThetaVector:
    """Survival-ratio starting values of the continuous initial estimate
    evaluated on the pooled price grid."""
    return cdf_to_theta(np.asarray(f_init(np.asarray(z, dtype=float))))
