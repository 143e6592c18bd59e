"""Three-phase session engine: opening call auction, cool period, and
continuous double auction.

A day runs as one state machine.  Orders accumulating in the call
auction update an indicative clearing price after every event; the batch
executes once at 9:25 and the residual book carries forward.  Cool
period placements are accepted but held back, then sequenced into the
continuous auction at 9:30 in arrival order.  Continuous matching fills
incoming orders at the resting price, FIFO within each level.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .book import BUY, SELL, Order, OrderBook, Trade
from .errors import (CancelForbidden, DuplicateId, LobLabError,
                     OutsideTradingHours, PriceOutsideBand, UnknownId)
from .market import (CALL_CLOSE, COOL_END, DAY_END, NO_CANCEL_FROM, Phase,
                     PriceBand, compute_band, log_price, phase_of)
from .relprice import PlacementRecord, RefContext
from .stats import VOL_WINDOW, spread


@dataclass(frozen=True, slots=True)
class FrozenQuotes:
    """Best quotes captured at 9:25, immutable for the cool period."""

    bid: int | None
    ask: int | None


@dataclass
class PhaseOutcome:
    """Batch execution result: trades plus the orders left resting."""

    trades: list[Trade]
    residual: list[Order]


def _uncross(buy_at: np.ndarray, sell_at: np.ndarray, band: PriceBand,
             ) -> tuple[int, int] | None:
    """Clearing price and volume over per-tick aggregate size arrays.

    Applies, in order: (i) maximum executable volume, (ii) full
    execution of buys above / sells below the price, (iii) full
    execution of at-price orders on at least one side.  Ties break
    toward the previous close, then toward the higher price.
    """
    buys_at_or_above = np.cumsum(buy_at[::-1])[::-1]
    sells_at_or_below = np.cumsum(sell_at)
    vol = np.minimum(buys_at_or_above, sells_at_or_below)
    vmax = vol.max() if vol.size else 0
    if vmax == 0:
        return None
    buys_above = buys_at_or_above - buy_at
    sells_below = sells_at_or_below - sell_at
    ok = (vol == vmax) & (buys_above <= vol) & (sells_below <= vol) & (
        (buys_at_or_above <= vol) | (sells_at_or_below <= vol))
    idx = np.nonzero(ok)[0]
    prices = idx + band.min
    dist = np.abs(prices - band.prev_close)
    pick = np.lexsort((-prices, dist))[0]
    return int(prices[pick]), int(vmax)


def clearing_price(buys, sells, band: PriceBand) -> tuple[int, int] | None:
    """One-shot call-auction uncross for explicit order collections.

    Returns (price, executable volume) or None when nothing crosses.
    """
    width = band.max - band.min + 1
    buy_at = np.zeros(width, dtype=np.int64)
    sell_at = np.zeros(width, dtype=np.int64)
    for order in buys:
        if not band.min <= order.price <= band.max:
            raise PriceOutsideBand(f"buy at {order.price} outside band")
        buy_at[order.price - band.min] += order.remaining
    for order in sells:
        if not band.min <= order.price <= band.max:
            raise PriceOutsideBand(f"sell at {order.price} outside band")
        sell_at[order.price - band.min] += order.remaining
    return _uncross(buy_at, sell_at, band)


class CallAuction:
    """Order accumulation and virtual-price tracking for 9:15-9:25.

    Aggregate sizes per tick are kept incrementally so the re-clear
    after each event costs O(band width) vectorized work.
    """

    def __init__(self, band: PriceBand) -> None:
        self.band = band
        width = band.max - band.min + 1
        self._buy_at = np.zeros(width, dtype=np.int64)
        self._sell_at = np.zeros(width, dtype=np.int64)
        self._orders: dict[int, Order] = {}
        self._arrivals: list[Order] = []
        self.pv: tuple[int, int] | None = None  # (price, volume)

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._orders

    def place(self, order: Order) -> tuple[int, int] | None:
        """Accept an order and return the updated virtual price."""
        if not self.band.min <= order.price <= self.band.max:
            raise PriceOutsideBand(
                f"price {order.price} outside [{self.band.min}, {self.band.max}]")
        if order.id in self._orders:
            raise DuplicateId(f"order id {order.id} already placed")
        self._orders[order.id] = order
        self._arrivals.append(order)
        arr = self._buy_at if order.side == BUY else self._sell_at
        arr[order.price - self.band.min] += order.size
        self.pv = _uncross(self._buy_at, self._sell_at, self.band)
        return self.pv

    def cancel(self, order_id: int, ts: int) -> tuple[int, int] | None:
        """Withdraw an order; rejected in the 9:20-9:25 no-cancel window."""
        if ts >= NO_CANCEL_FROM:
            raise CancelForbidden(f"cancel at {ts} inside the 9:20-9:25 window")
        order = self._orders.pop(order_id, None)
        if order is None:
            raise UnknownId(f"order id {order_id} not in the call auction")
        arr = self._buy_at if order.side == BUY else self._sell_at
        arr[order.price - self.band.min] -= order.remaining
        order.remaining = 0  # marks the arrival-list entry dead
        self.pv = _uncross(self._buy_at, self._sell_at, self.band)
        return self.pv

    def close(self, close_ts: int) -> PhaseOutcome:
        """Execute the batch at the final virtual price.

        Orders priced strictly better than the clearing price fill in
        full; orders at exactly the price fill FIFO by arrival until the
        executable volume is exhausted.  All trades print at the
        clearing price.
        """
        live = [o for o in self._arrivals if o.remaining > 0]
        if self.pv is None:
            return PhaseOutcome([], live)
        price, volume = self.pv

        buy_fills = self._allocate(live, BUY, price, volume)
        sell_fills = self._allocate(live, SELL, price, volume)
        assert sum(f for _, f in buy_fills) == sum(f for _, f in sell_fills) == volume

        trades = []
        bi = si = 0
        b_left = s_left = 0
        while bi < len(buy_fills) or b_left:
            if not b_left:
                buy, b_left = buy_fills[bi]
                bi += 1
            if not s_left:
                sell, s_left = sell_fills[si]
                si += 1
            size = min(b_left, s_left)
            trades.append(Trade(close_ts, price, size, buy.id, sell.id))
            b_left -= size
            s_left -= size

        for order, fill in buy_fills:
            order.remaining -= fill
        for order, fill in sell_fills:
            order.remaining -= fill
        residual = [o for o in live if o.remaining > 0]
        return PhaseOutcome(trades, residual)

    @staticmethod
    def _allocate(live: list[Order], side: int, price: int, volume: int,
                  ) -> list[tuple[Order, int]]:
        fills = []
        at_price_budget = volume
        for order in live:
            if order.side == side and (order.price - price) * side > 0:
                fills.append((order, order.remaining))
                at_price_budget -= order.remaining
        for order in live:
            if at_price_budget <= 0:
                break
            if order.side == side and order.price == price:
                fill = min(order.remaining, at_price_budget)
                fills.append((order, fill))
                at_price_budget -= fill
        return fills


def cda_place(book: OrderBook, order: Order, trade_ts: int | None = None,
              ) -> list[Trade]:
    """Match an incoming order against the book, resting any remainder.

    A buy crossing the spread fills FIFO at successive ask levels, each
    fill printing at the resting price; symmetric for sells.  The
    post-state is always uncrossed.
    """
    price = order.price
    band = book.band
    if not band.min <= price <= band.max:
        raise PriceOutsideBand(f"price {price} outside [{band.min}, {band.max}]")
    if order.id in book._by_id:
        raise DuplicateId(f"order id {order.id} already resting")
    ts = order.ts if trade_ts is None else trade_ts
    trades: list[Trade] = []
    remaining = order.remaining
    oid = order.id
    if order.side == BUY:
        by_id = book._by_id
        while remaining and book.best_ask is not None and price >= book.best_ask:
            level = book.best_ask
            queue = book.asks[level]
            sizes = book._ask_size
            while remaining and queue:
                head = queue[0]
                take = head.remaining if head.remaining < remaining else remaining
                head.remaining -= take
                remaining -= take
                sizes[level] -= take
                trades.append(Trade(ts, level, take, oid, head.id))
                if head.remaining == 0:
                    queue.popleft()
                    del by_id[head.id]
            if not queue:
                del book.asks[level]
                del sizes[level]
                book._refresh_best_ask()
    else:
        by_id = book._by_id
        while remaining and book.best_bid is not None and price <= book.best_bid:
            level = book.best_bid
            queue = book.bids[level]
            sizes = book._bid_size
            while remaining and queue:
                head = queue[0]
                take = head.remaining if head.remaining < remaining else remaining
                head.remaining -= take
                remaining -= take
                sizes[level] -= take
                trades.append(Trade(ts, level, take, head.id, oid))
                if head.remaining == 0:
                    queue.popleft()
                    del by_id[head.id]
            if not queue:
                del book.bids[level]
                del sizes[level]
                book._refresh_best_bid()
    order.remaining = remaining
    if remaining:
        book.insert(order)
    return trades


class DayEngine:
    """Single-stock, single-day state machine routing events by phase.

    Phase transitions are time-driven: the first timestamp at or past
    9:25 closes the call auction and freezes the residual-book quotes;
    the first at or past 9:30 flushes cool-period placements through
    continuous matching in arrival order.
    """

    def __init__(self, prev_close: int) -> None:
        self.band = compute_band(prev_close)
        self.call = CallAuction(self.band)
        self.book = OrderBook(self.band)
        self.frozen: FrozenQuotes | None = None
        self.pending_cool: list[Order] = []
        self.call_closed = False
        self.cool_flushed = False
        self._ids: set[int] = set()

    def advance_to(self, ts: int) -> list[Trade]:
        """Run any phase transitions due strictly before this time."""
        trades: list[Trade] = []
        if not self.call_closed and ts >= CALL_CLOSE:
            outcome = self.call.close(CALL_CLOSE)
            for order in outcome.residual:
                self.book.insert(order)
            self.frozen = FrozenQuotes(self.book.best_bid, self.book.best_ask)
            self.call_closed = True
            trades.extend(outcome.trades)
        if not self.cool_flushed and ts >= COOL_END:
            for order in self.pending_cool:
                trades.extend(cda_place(self.book, order, trade_ts=COOL_END))
            self.pending_cool.clear()
            self.cool_flushed = True
        return trades

    def finalize(self) -> list[Trade]:
        """Force the remaining transitions after the stream ends."""
        return self.advance_to(DAY_END)

    def refs(self, ts: int, phase: Phase | None = None) -> RefContext:
        """Reference prices in force right before a placement at ts."""
        if phase is None:
            phase = phase_of(ts)
        if phase is Phase.CALL:
            pv = self.call.pv
            return RefContext(pv=pv[0] if pv else None)
        if phase is Phase.COOL:
            frozen = self.frozen
            if frozen is None:
                return RefContext()
            return RefContext(frozen_bid=frozen.bid, frozen_ask=frozen.ask)
        if phase is Phase.CDA:
            return RefContext(bid=self.book.best_bid, ask=self.book.best_ask)
        return RefContext()

    def ref_tick(self, phase: Phase, side: int) -> int | None:
        """Same-side reference price in ticks, or None if undefined."""
        if phase is Phase.CALL:
            pv = self.call.pv
            return pv[0] if pv else None
        if phase is Phase.COOL:
            frozen = self.frozen
            if frozen is None:
                return None
            return frozen.bid if side == BUY else frozen.ask
        if phase is Phase.CDA:
            return self.book.best_bid if side == BUY else self.book.best_ask
        return None

    def mark_price(self, phase: Phase) -> float | None:
        """Log-price mark of the current state: the live (or frozen) mid,
        or the virtual price during the call auction."""
        if phase is Phase.CDA:
            bid, ask = self.book.best_bid, self.book.best_ask
        elif phase is Phase.COOL:
            if self.frozen is None:
                return None
            bid, ask = self.frozen.bid, self.frozen.ask
        elif phase is Phase.CALL:
            pv = self.call.pv
            return log_price(pv[0]) if pv else None
        else:
            return None
        if bid is None or ask is None:
            return None
        return (log_price(bid) + log_price(ask)) / 2.0

    def place(self, order: Order, phase: Phase | None = None) -> list[Trade]:
        """Route a placement to its phase engine; returns its trades."""
        if phase is None:
            phase = phase_of(order.ts)
        if phase is None:
            raise OutsideTradingHours(f"placement at {order.ts}")
        if order.id in self._ids:
            raise DuplicateId(f"order id {order.id} already used today")
        if phase is Phase.CALL:
            self.call.place(order)
            trades: list[Trade] = []
        elif phase is Phase.COOL:
            band = self.band
            if not band.min <= order.price <= band.max:
                raise PriceOutsideBand(
                    f"price {order.price} outside [{band.min}, {band.max}]")
            self.pending_cool.append(order)
            trades = []
        else:
            trades = cda_place(self.book, order)
        self._ids.add(order.id)
        return trades

    def cancel(self, ts: int, order_id: int, phase: Phase | None = None) -> None:
        """Route a cancel; rejected whenever the phase forbids it."""
        if phase is None:
            phase = phase_of(ts)
        if phase is None:
            raise OutsideTradingHours(f"cancel at {ts}")
        if phase is Phase.CALL:
            self.call.cancel(order_id, ts)
        elif phase is Phase.COOL:
            raise CancelForbidden("cool period accepts no cancelations")
        else:
            self.book.cancel(order_id)


@dataclass
class DayResult:
    """Everything a day's replay produces.

    quotes rows are (ts, bid, ask) per accepted cool/CDA event (frozen
    display values during the cool period); pv_path rows are
    (ts, price, volume) per accepted call-auction event, with None price
    while nothing crosses.
    """

    trades: list[Trade] = field(default_factory=list)
    quotes: list[tuple[int, int | None, int | None]] = field(default_factory=list)
    pv_path: list[tuple[int, int | None, int]] = field(default_factory=list)
    placements: list[PlacementRecord] = field(default_factory=list)
    rejects: list[tuple[int, int, str]] = field(default_factory=list)


class DayRunner:
    """Replays an ordered event stream through a DayEngine, recording
    trades, quote and virtual-price trajectories, and per-placement
    reference context for downstream relative-price sampling.
    """

    def __init__(self, prev_close: int) -> None:
        self.engine = DayEngine(prev_close)
        self.result = DayResult()
        self._last_mid: float | None = None
        self._vol_diffs: deque[float] = deque()
        self._vol_sum = 0.0

    def feed(self, events) -> None:
        """Apply events in (ts, seq) order; rejects are logged, not fatal."""
        engine = self.engine
        res = self.result
        for ev in events:
            if not engine.cool_flushed:
                res.trades.extend(engine.advance_to(ev.ts))
            phase = phase_of(ev.ts)
            try:
                if ev.action == "C":
                    engine.cancel(ev.ts, ev.order_id, phase)
                else:
                    self._place(ev, phase)
            except LobLabError as exc:
                res.rejects.append((ev.ts, ev.seq, type(exc).__name__))
                continue
            if phase is Phase.CALL:
                pv = engine.call.pv
                res.pv_path.append(
                    (ev.ts, pv[0], pv[1]) if pv else (ev.ts, None, 0))
            elif phase is Phase.COOL:
                frozen = engine.frozen
                res.quotes.append((ev.ts, frozen.bid, frozen.ask))
            elif phase is Phase.CDA:
                res.quotes.append((ev.ts, engine.book.best_bid, engine.book.best_ask))

    def _place(self, ev, phase) -> None:
        engine = self.engine
        ctx = engine.refs(ev.ts, phase)
        spread_before = vol_before = None
        if phase is Phase.COOL:
            if ctx.frozen_bid is not None and ctx.frozen_ask is not None:
                spread_before = spread(ctx.frozen_bid, ctx.frozen_ask)
        elif phase is Phase.CDA:
            if ctx.bid is not None and ctx.ask is not None:
                spread_before = spread(ctx.bid, ctx.ask)
            if len(self._vol_diffs) == VOL_WINDOW:
                vol_before = self._vol_sum / VOL_WINDOW
        order = Order(ev.order_id, ev.ts, ev.seq, ev.side, ev.price, ev.size)
        trades = engine.place(order, phase)
        self.result.trades.extend(trades)
        self.result.placements.append(PlacementRecord(
            ev.ts, ev.seq, ev.side, ev.price, phase, ctx, spread_before, vol_before))
        if phase is Phase.CDA:
            bid, ask = engine.book.best_bid, engine.book.best_ask
            if bid is not None and ask is not None:
                mid = (log_price(bid) + log_price(ask)) / 2.0
                if self._last_mid is not None:
                    if len(self._vol_diffs) == VOL_WINDOW:
                        self._vol_sum -= self._vol_diffs.popleft()
                    diff = abs(mid - self._last_mid)
                    self._vol_diffs.append(diff)
                    self._vol_sum += diff
                self._last_mid = mid

    def finish(self) -> DayResult:
        """Run outstanding transitions and return the day's outputs."""
        self.result.trades.extend(self.engine.finalize())
        return self.result


def run_day(events, prev_close: int) -> DayResult:
    """Replay one stock's day: route every event, close the call auction
    at 9:25, flush cool-period placements at 9:30, and collect all
    trajectories.  Events must be sorted by (ts, seq).
    """
    runner = DayRunner(prev_close)
    runner.feed(events)
    return runner.finish()
