"""Relative logarithmic order prices against phase-specific references.

The relative price x of a placement is the signed log distance from a
reference captured right before the order arrives: the virtual clearing
price during the call auction, the frozen quotes during the cool period,
and the live same-side best quote in the continuous auction.  Buys
measure price minus reference, sells reference minus price, so larger x
is more aggressive on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .book import BUY, Order
from .errors import MissingReference
from .market import Phase, log_price


@dataclass(slots=True)
class RefContext:
    """Reference prices (in ticks) in force right before a placement.

    pv applies during the call auction; frozen_bid/frozen_ask during the
    cool period; bid/ask are live best quotes in the continuous auction.
    Unset fields mean the reference does not exist at that moment.
    """

    pv: int | None = None
    frozen_bid: int | None = None
    frozen_ask: int | None = None
    bid: int | None = None
    ask: int | None = None


@dataclass(slots=True)
class RelPriceSample:
    """One relative-price observation with pre-placement context."""

    x: float
    side: int
    phase: Phase
    ts: int
    spread_before: float | None = None
    vol_before: float | None = None


@dataclass(slots=True)
class PlacementRecord:
    """Reference context emitted by the engine for an accepted placement."""

    ts: int
    seq: int
    side: int
    price: int
    phase: Phase
    ctx: RefContext
    spread_before: float | None
    vol_before: float | None


def reference_for(phase: Phase, side: int, ctx: RefContext,
                  ) -> tuple[float | None, float | None]:
    """Logarithmic reference pair (buy ref, sell ref) for a placement.

    Raises MissingReference when the reference required for the given
    side is undefined: no virtual price yet in the call auction, or an
    empty book side in the continuous auction.
    """
    if phase is Phase.CALL:
        if ctx.pv is None:
            raise MissingReference("no virtual price before this order")
        ref = log_price(ctx.pv)
        return ref, ref
    if phase is Phase.COOL:
        bid, ask = ctx.frozen_bid, ctx.frozen_ask
    else:
        bid, ask = ctx.bid, ctx.ask
    r1 = log_price(bid) if bid is not None else None
    r2 = log_price(ask) if ask is not None else None
    if side == BUY:
        if r1 is None:
            raise MissingReference("no best bid to reference")
    elif r2 is None:
        raise MissingReference("no best ask to reference")
    return r1, r2


def relative_price(order: Order, refs: tuple[float | None, float | None],
                   phase: Phase, *, spread_before: float | None = None,
                   vol_before: float | None = None) -> RelPriceSample:
    """Relative price of one order against a precomputed reference pair."""
    r1, r2 = refs
    pi = log_price(order.price)
    if order.side == BUY:
        if r1 is None:
            raise MissingReference("buy order needs the first reference")
        x = pi - r1
    else:
        if r2 is None:
            raise MissingReference("sell order needs the second reference")
        x = r2 - pi
    return RelPriceSample(x, order.side, phase, order.ts,
                          spread_before, vol_before)


def annotate_context(sample: RelPriceSample, spread_before: float | None = None,
                     vol_before: float | None = None) -> RelPriceSample:
    """Attach pre-placement spread and volatility to a sample."""
    return replace(sample, spread_before=spread_before, vol_before=vol_before)


def samples_from(records) -> list[RelPriceSample]:
    """Relative-price samples for every placement with a defined reference.

    Placements whose reference is missing (before the first virtual
    price, or against an empty book side) are skipped, not scored zero.
    Cancels never reach this stage: only placements produce samples.
    """
    out = []
    for rec in records:
        try:
            r1, r2 = reference_for(rec.phase, rec.side, rec.ctx)
        except MissingReference:
            continue
        pi = log_price(rec.price)
        x = pi - r1 if rec.side == BUY else r2 - pi
        out.append(RelPriceSample(x, rec.side, rec.phase, rec.ts,
                                  rec.spread_before, rec.vol_before))
    return out
