"""Standing-price mechanics, bid replay, and the synthetic study driver."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secondprice import (AuctionState, SimConfig, ValidationError,
                         ValuationDistribution, has_ties, replay_bids,
                         run_auction, run_study, standing_price_update)


class TestStandingPriceUpdate:
    def test_bid_at_or_below_standing_is_not_placed(self):
        s = AuctionState(2.0, 2.0)
        assert standing_price_update(s, 1.5) is s
        assert standing_price_update(s, 2.0) is s

    def test_first_bid_above_reserve_does_not_move_the_price(self):
        s = standing_price_update(AuctionState(2.0, 2.0), 8.05)
        assert s.second == 2.0
        assert s.top == 8.05
        assert s.jumps == ()

    def test_second_bid_sets_price_to_second_highest(self):
        s = standing_price_update(AuctionState(2.0, 2.0), 8.05)
        s = standing_price_update(s, 5.09)
        assert s.second == 5.09
        assert s.top == 8.05
        assert s.jumps == (5.09,)

    def test_higher_bid_raises_price_to_previous_top(self):
        s = AuctionState(2.0, 5.09, top=8.05, jumps=(5.09,))
        s = standing_price_update(s, 12.82)
        assert s.second == 8.05
        assert s.top == 12.82
        assert s.jumps == (5.09, 8.05)


class TestReplay:
    def test_four_bid_stream(self):
        times = (0.55, 5.96, 9.65, 24.0)
        bids = (8.05, 5.09, 12.82, 10.14)
        rec = replay_bids(2.0, 30.0, times, bids)
        assert rec.prices == (5.09, 8.05, 10.14)
        assert rec.sold
        assert rec.final_price == 10.14
        # standing-price path including the reserve
        assert (2.0,) + rec.prices == (2.0, 5.09, 8.05, 10.14)
        # jump instants recovered from the waiting times
        expected_waits = (5.96, 9.65 - 5.96, 24.0 - 9.65)
        assert rec.waits == expected_waits
        assert np.allclose(np.cumsum(rec.waits), (5.96, 9.65, 24.0),
                           rtol=0.0, atol=1e-12)

    def test_ignored_bids_do_not_change_the_path(self):
        times = (0.55, 3.0, 5.96, 9.65, 12.0, 24.0)
        bids = (8.05, 1.5, 5.09, 12.82, 6.0, 10.14)
        rec = replay_bids(2.0, 30.0, times, bids)
        assert rec.prices == (5.09, 8.05, 10.14)
        assert np.allclose(np.cumsum(rec.waits), (5.96, 9.65, 24.0),
                           rtol=0.0, atol=1e-12)

    def test_no_bid_above_reserve_means_unsold(self):
        rec = replay_bids(10.0, 5.0, (1.0, 2.0), (3.0, 9.9))
        assert not rec.sold
        assert rec.m == 0
        assert rec.final_price == 10.0

    def test_single_bid_above_reserve_sells_at_reserve(self):
        rec = replay_bids(1.0, 5.0, (1.0,), (4.0,))
        assert rec.sold
        assert rec.m == 0
        assert rec.final_price == 1.0

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_replay_invariants(self, data):
        reserve = data.draw(st.floats(0.0, 5.0))
        bids = data.draw(st.lists(
            st.floats(0.01, 100.0), min_size=0, max_size=20, unique=True))
        times = np.sort(data.draw(st.lists(
            st.floats(0.001, 9.999), min_size=len(bids), max_size=len(bids),
            unique=True)))
        rec = replay_bids(reserve, 10.0, times, bids)
        above = [b for b in bids if b > reserve]
        assert rec.sold == bool(above)
        assert rec.m <= max(0, len(above) - 1)
        assert all(p > reserve for p in rec.prices)
        assert np.all(np.diff(rec.prices) > 0)
        # the final standing price is the overall second maximum of the
        # reserve and all bids, whether or not every bid was placed
        if above:
            pool = sorted(list(bids) + [reserve])
            assert rec.final_price == pytest.approx(pool[-2])


class TestRunAuction:
    def test_matches_scalar_replay_of_its_own_trace(self):
        dist = ValuationDistribution.uniform(1.0, 20.0)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            rec, (times, bids) = run_auction(1.0, 50.0, 0.5, dist, rng,
                                             return_trace=True)
            again = replay_bids(0.5, 50.0, times, bids)
            assert again == rec

    def test_trace_times_within_window(self):
        rng = np.random.default_rng(7)
        _, (times, _) = run_auction(2.0, 10.0, 0.0,
                                    ValuationDistribution.uniform(0.0, 1.0),
                                    rng, return_trace=True)
        assert np.all(times <= 10.0)
        assert np.all(np.diff(times) > 0)


class TestValuationDistribution:
    @pytest.mark.parametrize("dist", [
        ValuationDistribution.uniform(1.0, 20.0),
        ValuationDistribution.piecewise_uniform([(1, 2, 0.5), (3, 4, 0.5)]),
        ValuationDistribution.pareto(3.0, 100.0),
        ValuationDistribution.gamma(10.0, 2.0),
        ValuationDistribution.beta(2.0, 2.0),
        ValuationDistribution.table([0.0, 1.0, 3.0], [0.0, 0.4, 1.0]),
    ])
    def test_cdf_sample_consistency(self, dist):
        rng = np.random.default_rng(42)
        x = dist.sample(rng, 4000)
        lo, hi = dist.support()
        assert np.all(x >= lo - 1e-9)
        grid = np.linspace(lo, hi, 50)
        cdf = dist.cdf(grid)
        assert np.all(np.diff(cdf) >= -1e-12)
        assert cdf[0] <= 1e-6 and cdf[-1] >= 1.0 - 1e-6
        # empirical CDF agrees with the analytic one (loose 4-sigma check)
        emp = np.searchsorted(np.sort(x), grid, side="right") / len(x)
        assert np.max(np.abs(emp - cdf)) < 4.0 / np.sqrt(len(x))

    def test_pdf_integrates_to_one(self):
        dist = ValuationDistribution.piecewise_uniform(
            [(1, 2, 0.5), (3, 4, 0.5)])
        grid = np.linspace(0.0, 5.0, 20001)
        mass = np.trapezoid(dist.pdf(grid), grid)
        assert mass == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("bad", [
        lambda: ValuationDistribution.uniform(3.0, 2.0),
        lambda: ValuationDistribution.uniform(-1.0, 2.0),
        lambda: ValuationDistribution.pareto(0.0, 1.0),
        lambda: ValuationDistribution.gamma(1.0, 0.0),
        lambda: ValuationDistribution.beta(-1.0, 2.0),
        lambda: ValuationDistribution.piecewise_uniform([(1, 2, 0.7)]),
        lambda: ValuationDistribution.table([0.0, 1.0], [0.0, 0.5]),
    ])
    def test_invalid_parameters_rejected(self, bad):
        with pytest.raises(ValidationError):
            bad()


class TestRunStudy:
    def test_study_shape_and_determinism(self):
        config = SimConfig(lam=1.0, tau=20.0, K=30, seed=99)
        dist = ValuationDistribution.uniform(1.0, 5.0)
        ds1 = run_study(config, dist)
        ds2 = run_study(config, dist)
        assert ds1.K == 30
        assert ds1.tau == 20.0
        assert not has_ties(ds1)
        assert ds1 == ds2

    def test_reserve_policy_callable(self):
        config = SimConfig(lam=0.5, tau=10.0, K=10, seed=3,
                           reserve_policy=lambda rng: rng.uniform(0.0, 2.0))
        ds = run_study(config, ValuationDistribution.uniform(1.0, 5.0))
        reserves = [a.reserve for a in ds.auctions]
        assert len(set(reserves)) == len(reserves)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValidationError):
            SimConfig(lam=0.0, tau=10.0, K=5, seed=0)
