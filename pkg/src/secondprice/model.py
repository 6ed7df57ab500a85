"""Domain types, validation, cross-auction pooling, and the
survival-ratio reparametrization of a CDF.

Indexing conventions
--------------------
Rank arrays (``u``, ``S``, ``Sbar``) and the bookkeeping vectors ``l`` and
``qsize`` are 1-based, matching the order-statistic definitions they come
from: ``u[j]`` is the position of the j-th pooled non-reserve standing
price inside ``z`` counting from 1.  Auction index sets (``Ks``) are
plain 0-based Python indices into ``ObservedDataset.auctions``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TieError, ValidationError

_TAIL_TOL = 1e-9


@dataclass(frozen=True)
class AuctionRecord:
    """One auction: reserve price, standing-price jumps, sold flag.

    ``jumps`` holds pairs ``(price, wait)`` where ``wait`` is the time
    elapsed since the previous standing-price change (or since the start
    of the auction, for the first jump).
    """

    reserve: float
    duration: float
    jumps: tuple[tuple[float, float], ...]
    sold: bool

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((float(x), float(t)) for x, t in self.jumps))
        violations = []
        if self.reserve < 0:
            violations.append(f"reserve {self.reserve} is negative")
        if self.duration <= 0:
            violations.append(f"duration {self.duration} is not positive")
        prices = [x for x, _ in self.jumps]
        waits = [t for _, t in self.jumps]
        if prices:
            if prices[0] <= self.reserve:
                violations.append(
                    f"first jump price {prices[0]} does not exceed reserve {self.reserve}"
                )
            for a, b in zip(prices, prices[1:]):
                if b <= a:
                    violations.append(f"jump prices not strictly increasing at {a} -> {b}")
                    break
            if any(t <= 0 for t in waits):
                violations.append("non-positive waiting time")
            if sum(waits) > self.duration + _TAIL_TOL * max(self.duration, 1.0):
                violations.append(
                    f"waiting times sum to {sum(waits)} > duration {self.duration}"
                )
            if not self.sold:
                violations.append("auction has standing-price jumps but is marked unsold")
        if violations:
            raise ValidationError(violations)

    @property
    def m(self) -> int:
        """Number of standing-price changes."""
        return len(self.jumps)

    @property
    def prices(self) -> tuple[float, ...]:
        return tuple(x for x, _ in self.jumps)

    @property
    def waits(self) -> tuple[float, ...]:
        return tuple(t for _, t in self.jumps)

    @property
    def tail_time(self) -> float:
        """Time from the last standing-price change to the close."""
        return max(0.0, self.duration - sum(self.waits))

    @property
    def first_wait(self) -> float:
        """Waiting time until the first jump; the full duration if none."""
        return self.jumps[0][1] if self.jumps else self.duration

    @property
    def final_price(self) -> float:
        """Final selling price (the reserve when there are no jumps)."""
        return self.jumps[-1][0] if self.jumps else self.reserve

    def price_times(self) -> list[tuple[float, float]]:
        """(price, attached time) pairs for the reserve and every jump.

        The time attached to a price is how long it stood as the selling
        price; the last one is the tail time to the close.
        """
        out = [(self.reserve, self.first_wait)]
        for i, (x, _) in enumerate(self.jumps):
            t = self.jumps[i + 1][1] if i + 1 < self.m else self.tail_time
            out.append((x, t))
        return out


def validate_auction(reserve, duration, jumps, sold) -> AuctionRecord:
    """Build an :class:`AuctionRecord`, raising :class:`ValidationError`
    listing every violated invariant."""
    return AuctionRecord(float(reserve), float(duration), tuple(jumps), bool(sold))


@dataclass(frozen=True)
class ObservedDataset:
    """K independent auctions of the same product with a common duration."""

    auctions: tuple[AuctionRecord, ...]
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "auctions", tuple(self.auctions))
        violations = []
        if len(self.auctions) < 1:
            violations.append("dataset must contain at least one auction")
        for k, a in enumerate(self.auctions):
            if a.duration != self.tau:
                violations.append(
                    f"auction {k} has duration {a.duration} != common tau {self.tau}"
                )
        if violations:
            raise ValidationError(violations)

    @property
    def K(self) -> int:
        return len(self.auctions)

    def pooled_prices(self) -> np.ndarray:
        vals = [a.reserve for a in self.auctions]
        for a in self.auctions:
            vals.extend(a.prices)
        return np.asarray(vals, dtype=float)


def has_ties(dataset: ObservedDataset) -> bool:
    vals = np.sort(dataset.pooled_prices())
    return bool(np.any(np.diff(vals) == 0.0))


def break_ties(dataset: ObservedDataset, rng: np.random.Generator,
               scale: float = 0.01) -> ObservedDataset:
    """Return a tie-free copy by adding Uniform(0, scale) noise to the
    reserve prices (jump prices from a continuous model are tie-free with
    probability one; reserves are where ties occur in practice)."""
    auctions = []
    for a in dataset.auctions:
        # cap the jitter so the reserve cannot overtake the first jump
        cap = scale if a.m == 0 else min(scale, 0.5 * (a.jumps[0][0] - a.reserve))
        r = a.reserve + rng.uniform(0.0, cap)
        auctions.append(AuctionRecord(r, a.duration, a.jumps, a.sold))
    out = ObservedDataset(tuple(auctions), dataset.tau)
    if has_ties(out):
        raise TieError("ties persist after reserve jitter")
    return out


@dataclass(frozen=True)
class PooledData:
    """Merged cross-auction order structures used by the likelihood.

    ``xbar``/``z`` are ascending price arrays; ``tbar``/``ttilde`` carry
    the waiting time attached to each price; ``u``, ``S``, ``Sbar`` are
    1-based ranks (see module docstring); ``l``/``qsize`` follow the
    partition bookkeeping of the log-likelihood; ``t0`` holds the first
    waiting times of the sold auctions, ordered by auction index.
    """

    xbar: np.ndarray
    z: np.ndarray
    u: np.ndarray
    S: frozenset
    Sbar: frozenset
    Ks: frozenset
    tbar: np.ndarray
    ttilde: np.ndarray
    l: np.ndarray
    qsize: np.ndarray
    t0: np.ndarray

    @property
    def ell(self) -> int:
        return len(self.xbar)

    @property
    def n(self) -> int:
        """Total parameter count ell + K."""
        return len(self.z)


def pool(dataset: ObservedDataset) -> PooledData:
    """Merge the standing prices of all auctions into the pooled order
    structures.  Raises :class:`TieError` if any two pooled prices are
    equal (the caller is expected to jitter and retry)."""
    if has_ties(dataset):
        raise TieError("ties among pooled prices; apply noise before pooling")

    jump_entries = []   # (price, time)
    z_entries = []      # (price, time)
    finals = []         # final selling prices of auctions sold above reserve
    for k, a in enumerate(dataset.auctions):
        pt = a.price_times()
        z_entries.extend(pt)
        jump_entries.extend(pt[1:])
        if a.m > 0:
            finals.append(a.final_price)

    jump_entries.sort(key=lambda e: e[0])
    z_entries.sort(key=lambda e: e[0])
    xbar = np.array([p for p, _ in jump_entries], dtype=float)
    tbar = np.array([t for _, t in jump_entries], dtype=float)
    z = np.array([p for p, _ in z_entries], dtype=float)
    ttilde = np.array([t for _, t in z_entries], dtype=float)
    ell, n = len(xbar), len(z)

    # 1-based ranks of xbar inside z, and of the final selling prices
    u = np.searchsorted(z, xbar) + 1
    S = frozenset(int(np.searchsorted(xbar, p)) + 1 for p in finals)
    Sbar = frozenset(int(np.searchsorted(z, p)) + 1 for p in finals)
    Ks = frozenset(k for k, a in enumerate(dataset.auctions) if a.sold)

    idx = np.arange(1, n + 1)
    l = np.searchsorted(u, idx, side="right")          # count of u_j <= i
    sbar_sorted = np.sort(np.fromiter(Sbar, dtype=int)) if Sbar else np.empty(0, int)
    qsize = len(sbar_sorted) - np.searchsorted(sbar_sorted, idx, side="left")

    t0 = np.array([dataset.auctions[k].first_wait for k in sorted(Ks)], dtype=float)
    return PooledData(xbar=xbar, z=z, u=u, S=S, Sbar=Sbar, Ks=Ks,
                      tbar=tbar, ttilde=ttilde, l=l.astype(int),
                      qsize=qsize.astype(int), t0=t0)


@dataclass(frozen=True)
class MonotoneCurve:
    """A CDF estimate: step or piecewise-linear over a knot grid.

    Step curves are right-continuous, 0 below the first knot (all
    estimators here are anchored at F(0) = 0) and constant beyond the
    last knot.  Piecewise-linear curves are constant outside the knot
    range.
    """

    knots: np.ndarray
    values: np.ndarray
    kind: str = "step"

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        violations = []
        if self.kind not in ("step", "pl"):
            violations.append(f"unknown curve kind {self.kind!r}")
        if len(knots) != len(values) or len(knots) == 0:
            violations.append("knots and values must be equal-length and non-empty")
        else:
            if np.any(np.diff(knots) <= 0):
                violations.append("knots must be strictly ascending")
            if np.any(np.diff(values) < -1e-12):
                violations.append("values must be non-decreasing")
            if values[0] < -1e-12 or values[-1] > 1 + 1e-12:
                violations.append("values must lie in [0, 1]")
        if violations:
            raise ValidationError(violations)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "step":
            idx = np.searchsorted(self.knots, x, side="right") - 1
            out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)
        else:
            out = np.interp(x, self.knots, self.values)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ThetaVector:
    """Constraint-free survival-ratio parameters, each in [0, 1]."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        if np.any(theta < -1e-12) or np.any(theta > 1 + 1e-12):
            raise ValidationError("theta entries must lie in [0, 1]")

    def __len__(self):
        return len(self.theta)


def theta_to_cdf(theta: ThetaVector, z: np.ndarray) -> MonotoneCurve:
    """F(z_i) = 1 - prod_{j<=i} theta_j, as a step curve on z."""
    t = theta.theta if isinstance(theta, ThetaVector) else np.asarray(theta, float)
    z = np.asarray(z, dtype=float)
    if len(t) != len(z):
        raise ValidationError("theta and z must have equal length")
    values = 1.0 - np.cumprod(t)
    values = np.clip(np.maximum.accumulate(values), 0.0, 1.0)
    return MonotoneCurve(z, values, kind="step")


def cdf_to_theta(values: np.ndarray) -> ThetaVector:
    """theta_i = (1 - F(z_i)) / (1 - F(z_{i-1})), G(z_0) = 1, 0/0 := 0."""
    v = np.asarray(values, dtype=float)
    g = 1.0 - v
    g_prev = np.concatenate(([1.0], g[:-1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(g_prev > 0.0, g / np.where(g_prev > 0, g_prev, 1.0), 0.0)
    return ThetaVector(np.clip(theta, 0.0, 1.0))


def interpolate(curve: MonotoneCurve, anchor_zero: bool = False) -> MonotoneCurve:
    """Linear interpolation of a step curve through its knot values,
    optionally anchored to pass through (0, 0)."""
    knots = curve.knots
    values = curve.values
    if anchor_zero and (len(knots) == 0 or knots[0] > 0.0):
        knots = np.concatenate(([0.0], knots))
        values = np.concatenate(([0.0], values))
    return MonotoneCurve(knots, values, kind="pl")
