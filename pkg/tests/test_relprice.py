"""Relative-price computation and reference selection."""

import math
import random

import pytest

from loblab.book import BUY, SELL, Order
from loblab.errors import MissingReference
from loblab.market import COOL_END, Phase, compute_band, domain_bound, log_price
from loblab.relprice import (PlacementRecord, RefContext, annotate_context,
                             reference_for, relative_price, samples_from)


def mk(side, price, ts=COOL_END + 10):
    return Order(1, ts, 1, side, price, 100)


class TestRelativePrice:
    def test_buy_at_reference_is_zero(self):
        refs = (log_price(1000), log_price(1000))
        sample = relative_price(mk(BUY, 1000), refs, Phase.CDA)
        assert sample.x == 0.0
        assert sample.side == BUY and sample.phase is Phase.CDA

    def test_buy_above_reference(self):
        refs = (log_price(1000), None)
        sample = relative_price(mk(BUY, 1005), refs, Phase.CDA)
        assert sample.x == pytest.approx(math.log(10.05 / 10.00), rel=1e-12)

    def test_sell_above_reference_is_less_aggressive(self):
        refs = (None, log_price(1000))
        sample = relative_price(mk(SELL, 1005), refs, Phase.CDA)
        assert sample.x == pytest.approx(-math.log(10.05 / 10.00), rel=1e-12)

    def test_missing_reference(self):
        with pytest.raises(MissingReference):
            relative_price(mk(BUY, 1000), (None, log_price(1000)), Phase.CDA)
        with pytest.raises(MissingReference):
            relative_price(mk(SELL, 1000), (log_price(1000), None), Phase.CDA)

    def test_antisymmetry(self):
        rng = random.Random(4)
        for _ in range(200):
            ref = rng.randint(900, 1100)
            price = rng.randint(900, 1100)
            refs = (log_price(ref), log_price(ref))
            buy = relative_price(mk(BUY, price), refs, Phase.CDA)
            sell = relative_price(mk(SELL, price), refs, Phase.CDA)
            assert buy.x == pytest.approx(-sell.x, abs=1e-15)


class TestReferenceFor:
    def test_call_uses_virtual_price_for_both_sides(self):
        ctx = RefContext(pv=1000)
        assert reference_for(Phase.CALL, BUY, ctx) == \
            (log_price(1000), log_price(1000))
        assert reference_for(Phase.CALL, SELL, ctx) == \
            (log_price(1000), log_price(1000))

    def test_call_without_virtual_price(self):
        with pytest.raises(MissingReference):
            reference_for(Phase.CALL, BUY, RefContext())

    def test_cool_uses_frozen_quotes(self):
        ctx = RefContext(frozen_bid=999, frozen_ask=1001)
        r1, r2 = reference_for(Phase.COOL, BUY, ctx)
        assert r1 == log_price(999) and r2 == log_price(1001)

    def test_cda_same_best_price_convention(self):
        ctx = RefContext(bid=1000, ask=1002)
        r1, r2 = reference_for(Phase.CDA, BUY, ctx)
        assert r1 == log_price(1000)  # buys reference the best bid
        r1, r2 = reference_for(Phase.CDA, SELL, ctx)
        assert r2 == log_price(1002)  # sells reference the best ask

    def test_cda_missing_side(self):
        with pytest.raises(MissingReference):
            reference_for(Phase.CDA, BUY, RefContext(ask=1002))
        with pytest.raises(MissingReference):
            reference_for(Phase.CDA, SELL, RefContext(bid=1000))

    def test_one_sided_reference_is_enough_for_that_side(self):
        r1, r2 = reference_for(Phase.CDA, BUY, RefContext(bid=1000))
        assert r1 == log_price(1000) and r2 is None


class TestAnnotateContext:
    def test_attaches_context(self):
        sample = relative_price(mk(BUY, 1000),
                                (log_price(1000), None), Phase.CDA)
        annotated = annotate_context(sample, spread_before=0.001,
                                     vol_before=2e-4)
        assert annotated.spread_before == 0.001
        assert annotated.vol_before == 2e-4
        assert annotated.x == sample.x

    def test_missing_context_stays_empty(self):
        sample = relative_price(mk(BUY, 1000),
                                (log_price(1000), None), Phase.CALL)
        assert sample.spread_before is None and sample.vol_before is None


class TestSamplesFrom:
    def test_skips_records_without_reference(self):
        records = [
            PlacementRecord(100, 1, BUY, 1000, Phase.CALL, RefContext(),
                            None, None),
            PlacementRecord(200, 2, BUY, 1005, Phase.CALL, RefContext(pv=1000),
                            None, None),
        ]
        samples = samples_from(records)
        assert len(samples) == 1
        assert samples[0].x == pytest.approx(math.log(1005 / 1000), rel=1e-12)

    def test_context_passthrough(self):
        rec = PlacementRecord(300, 3, SELL, 1001, Phase.CDA,
                              RefContext(bid=1000, ask=1002), 0.002, 3e-4)
        (sample,) = samples_from([rec])
        assert sample.spread_before == 0.002
        assert sample.vol_before == 3e-4
        assert sample.x == pytest.approx(log_price(1002) - log_price(1001))

    def test_domain_bound_on_extreme_prices(self):
        band = compute_band(1000)
        bound = domain_bound(band)
        records = [
            PlacementRecord(1, 1, BUY, band.max, Phase.CDA,
                            RefContext(bid=band.min, ask=band.min + 1),
                            None, None),
            PlacementRecord(2, 2, SELL, band.min, Phase.CDA,
                            RefContext(bid=band.max - 1, ask=band.max),
                            None, None),
        ]
        for sample in samples_from(records):
            assert abs(sample.x) <= bound
