"""Synthetic auction generation: Poisson bidder arrivals, second-max
standing-price dynamics, and the valuation distributions used in the
simulation study."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import stats

from .errors import ValidationError
from .model import AuctionRecord, ObservedDataset, break_ties, has_ties


@dataclass(frozen=True)
class ValuationDistribution:
    """Population valuation distribution used to draw bids.

    Supported kinds: ``uniform(a, b)``, ``piecewise_uniform`` (weighted
    mixture of uniforms), ``pareto(scale, shape)``, ``gamma(shape,
    rate)``, ``beta(a, b)`` and ``table`` (inverse-CDF knots).  Pareto is
    exposed with explicit (scale, shape) naming; both values are
    configurable.
    """

    kind: str
    params: tuple

    # -- constructors -------------------------------------------------
    @staticmethod
    def uniform(a: float, b: float) -> "ValuationDistribution":
        if not a < b:
            raise ValidationError("uniform requires a < b")
        if a < 0:
            raise ValidationError("valuations must be non-negative")
        return ValuationDistribution("uniform", (float(a), float(b)))

    @staticmethod
    def piecewise_uniform(pieces) -> "ValuationDistribution":
        """pieces: iterable of (a, b, weight); weights must sum to 1."""
        pieces = tuple((float(a), float(b), float(w)) for a, b, w in pieces)
        if any(a >= b or a < 0 or w <= 0 for a, b, w in pieces):
            raise ValidationError("each piece needs 0 <= a < b and weight > 0")
        if abs(sum(w for _, _, w in pieces) - 1.0) > 1e-9:
            raise ValidationError("piece weights must sum to 1")
        return ValuationDistribution("piecewise_uniform", pieces)

    @staticmethod
    def pareto(scale: float, shape: float) -> "ValuationDistribution":
        if scale <= 0 or shape <= 0:
            raise ValidationError("pareto requires scale > 0 and shape > 0")
        return ValuationDistribution("pareto", (float(scale), float(shape)))

    @staticmethod
    def gamma(shape: float, rate: float) -> "ValuationDistribution":
        if shape <= 0 or rate <= 0:
            raise ValidationError("gamma requires shape > 0 and rate > 0")
        return ValuationDistribution("gamma", (float(shape), float(rate)))

    @staticmethod
    def beta(a: float, b: float) -> "ValuationDistribution":
        if a <= 0 or b <= 0:
            raise ValidationError("beta requires positive shape parameters")
        return ValuationDistribution("beta", (float(a), float(b)))

    @staticmethod
    def table(xs, ps) -> "ValuationDistribution":
        """Inverse-CDF knots: F(xs[i]) = ps[i]; linear in between."""
        xs = tuple(float(x) for x in xs)
        ps = tuple(float(p) for p in ps)
        if len(xs) != len(ps) or len(xs) < 2:
            raise ValidationError("table needs >= 2 matching knots")
        if any(np.diff(xs) <= 0) or any(np.diff(ps) < 0):
            raise ValidationError("table knots must be increasing")
        if ps[0] != 0.0 or ps[-1] != 1.0 or xs[0] < 0:
            raise ValidationError("table must span probabilities 0..1 over x >= 0")
        return ValuationDistribution("table", (xs, ps))

    # -- internals ----------------------------------------------------
    def _frozen(self):
        if self.kind == "pareto":
            scale, shape = self.params
            return stats.pareto(b=shape, scale=scale)
        if self.kind == "gamma":
            shape, rate = self.params
            return stats.gamma(a=shape, scale=1.0 / rate)
        if self.kind == "beta":
            a, b = self.params
            return stats.beta(a, b)
        raise AssertionError(self.kind)

    # -- API ----------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size)
        if self.kind == "piecewise_uniform":
            w = np.array([p[2] for p in self.params])
            idx = rng.choice(len(self.params), size=size, p=w / w.sum())
            lo = np.array([p[0] for p in self.params])[idx]
            hi = np.array([p[1] for p in self.params])[idx]
            return rng.uniform(lo, hi)
        if self.kind == "pareto":
            scale, shape = self.params
            return scale * rng.uniform(0.0, 1.0, size) ** (-1.0 / shape)
        if self.kind == "table":
            xs, ps = self.params
            return np.interp(rng.uniform(0.0, 1.0, size), ps, xs)
        return self._frozen().rvs(size=size, random_state=rng)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            a, b = self.params
            return np.clip((x - a) / (b - a), 0.0, 1.0)
        if self.kind == "piecewise_uniform":
            out = np.zeros_like(x, dtype=float)
            for a, b, w in self.params:
                out = out + w * np.clip((x - a) / (b - a), 0.0, 1.0)
            return out
        if self.kind == "table":
            xs, ps = self.params
            return np.interp(x, xs, ps)
        return self._frozen().cdf(x)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            a, b = self.params
            return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)
        if self.kind == "piecewise_uniform":
            out = np.zeros_like(x, dtype=float)
            for a, b, w in self.params:
                out = out + np.where((x >= a) & (x <= b), w / (b - a), 0.0)
            return out
        if self.kind == "table":
            xs, ps = self.params
            slopes = np.diff(ps) / np.diff(xs)
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            return np.where((x >= xs[0]) & (x < xs[-1]), slopes[idx], 0.0)
        return self._frozen().pdf(x)

    def support(self) -> tuple[float, float]:
        """(lo, hi) with hi chosen so that F(hi) >= 1 - 1e-9 for
        unbounded distributions."""
        if self.kind == "uniform":
            return self.params
        if self.kind == "piecewise_uniform":
            return (min(p[0] for p in self.params), max(p[1] for p in self.params))
        if self.kind == "table":
            xs, _ = self.params
            return (xs[0], xs[-1])
        fz = self._frozen()
        lo = float(fz.ppf(0.0))
        if not np.isfinite(lo):
            lo = 0.0
        return (max(lo, 0.0), float(fz.ppf(1.0 - 1e-9)))


ReservePolicy = Union[float, Callable[[np.random.Generator], float]]


@dataclass(frozen=True)
class SimConfig:
    """Study configuration: arrival rate, window, reserve policy, size."""

    lam: float
    tau: float
    K: int
    seed: int
    reserve_policy: ReservePolicy = 0.0

    def __post_init__(self):
        if self.lam <= 0 or self.tau <= 0 or self.K < 1:
            raise ValidationError("SimConfig requires lam > 0, tau > 0, K >= 1")


@dataclass(frozen=True)
class AuctionState:
    """Running second-maximum bookkeeping for one auction."""

    reserve: float
    second: float
    top: Optional[float] = None
    jumps: tuple[float, ...] = ()


def standing_price_update(state: AuctionState, bid: float) -> AuctionState:
    """Apply one arriving bid.

    A bid at or below the standing price is not placed.  Otherwise the
    standing price becomes the second-highest placed bid (reserve
    included) and a jump is recorded iff it strictly increased.
    """
    if bid <= state.second:
        return state
    if state.top is None:
        # first bid above the reserve: it becomes the hidden top bid and
        # the standing price stays at the reserve
        return AuctionState(state.reserve, state.second, bid, state.jumps)
    new_second = min(bid, state.top)
    new_top = max(bid, state.top)
    jumps = state.jumps
    if new_second > state.second:
        jumps = jumps + (new_second,)
    return AuctionState(state.reserve, new_second, new_top, jumps)


def replay_bids(reserve: float, duration: float, times, bids,
                sold_hint: Optional[bool] = None) -> AuctionRecord:
    """Replay a chronological (time, bid) stream through the
    standing-price mechanics and return the resulting record."""
    state = AuctionState(reserve, reserve)
    jump_prices: list[float] = []
    jump_times: list[float] = []
    for t, b in zip(times, bids):
        new = standing_price_update(state, float(b))
        if len(new.jumps) > len(state.jumps):
            jump_prices.append(new.jumps[-1])
            jump_times.append(float(t))
        state = new
    sold = state.top is not None
    if sold_hint is not None:
        sold = sold or sold_hint
    waits = np.diff(np.asarray(jump_times), prepend=0.0)
    return AuctionRecord(reserve, duration,
                         tuple(zip(jump_prices, waits)), sold)


def _arrival_times(lam: float, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Exponential(lam) inter-arrival times accumulated until tau."""
    times = np.empty(0)
    total = 0.0
    block = max(16, int(lam * tau + 6 * np.sqrt(lam * tau) + 10))
    while True:
        gaps = rng.exponential(1.0 / lam, block)
        new = total + np.cumsum(gaps)
        times = np.concatenate((times, new))
        total = times[-1]
        if total > tau:
            break
    return times[times <= tau]


def run_auction(lam: float, tau: float, reserve: float,
                dist: ValuationDistribution, rng: np.random.Generator,
                return_trace: bool = False):
    """Simulate a single auction; optionally return the full bid trace."""
    times = _arrival_times(lam, tau, rng)
    bids = dist.sample(rng, len(times))

    # vectorized running second maximum of {reserve} U bids
    tops = np.maximum.accumulate(np.concatenate(([reserve], bids)))
    cand = np.minimum(bids, tops[:-1])
    sec = np.maximum.accumulate(np.concatenate(([reserve], cand)))
    jump_idx = np.flatnonzero(sec[1:] > sec[:-1])
    jump_prices = sec[1:][jump_idx]
    jump_times = times[jump_idx]
    waits = np.diff(jump_times, prepend=0.0)
    record = AuctionRecord(reserve, tau, tuple(zip(jump_prices, waits)),
                           bool(np.any(bids > reserve)))
    if return_trace:
        return record, (times, bids)
    return record


def run_study(config: SimConfig, dist: ValuationDistribution) -> ObservedDataset:
    """Generate K independent auctions on independent RNG substreams.

    Reserve-price ties (inevitable under a constant reserve policy) are
    broken with Uniform(0, 0.01) jitter on a dedicated substream."""
    streams = np.random.SeedSequence(config.seed).spawn(config.K + 1)
    auctions = []
    for k in range(config.K):
        rng = np.random.default_rng(streams[k])
        if callable(config.reserve_policy):
            reserve = float(config.reserve_policy(rng))
        else:
            reserve = float(config.reserve_policy)
        auctions.append(run_auction(config.lam, config.tau, reserve, dist, rng))
    dataset = ObservedDataset(tuple(auctions), config.tau)
    if has_ties(dataset):
        dataset = break_ties(dataset, np.random.default_rng(streams[-1]))
    return dataset
