"""Resting limit-order book with price-time priority.

Price levels are keyed on integer ticks with a FIFO queue per level;
priority is strictly (price, arrival sequence).  Partial executions keep
the original arrival priority for the remainder.  A book instance is
single-writer; snapshots are plain tuples safe to share across threads.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from .errors import DuplicateId, InsufficientDepth, PriceOutsideBand, UnknownId
from .market import PriceBand

BUY = 1
SELL = -1


# eq=False: orders are identities, which keeps FIFO-queue removal a
# pointer scan instead of a field-by-field comparison.
@dataclass(slots=True, eq=False)
class Order:
    """A limit order: side +1 buys / -1 sells, price in ticks.

    remaining tracks the unexecuted size while the order rests; fresh
    orders start with remaining == size.
    """

    id: int
    ts: int
    seq: int
    side: int
    price: int
    size: int
    remaining: int = -1

    def __post_init__(self) -> None:
        if self.remaining < 0:
            self.remaining = self.size


@dataclass(slots=True)
class Trade:
    """One execution; buy_id and sell_id reference the parent orders."""

    ts: int
    price: int
    size: int
    buy_id: int
    sell_id: int


class OrderBook:
    __slots__ = ("band", "bids", "asks", "best_bid", "best_ask",
                 "_bid_size", "_ask_size", "_by_id", "_bid_heap", "_ask_heap")

    def __init__(self, band: PriceBand) -> None:
        self.band = band
        self.bids: dict[int, deque[Order]] = {}
        self.asks: dict[int, deque[Order]] = {}
        self.best_bid: int | None = None
        self.best_ask: int | None = None
        self._bid_size: dict[int, int] = {}
        self._ask_size: dict[int, int] = {}
        self._by_id: dict[int, Order] = {}
        # Heaps hold candidate level prices with lazy deletion; bids negated.
        self._bid_heap: list[int] = []
        self._ask_heap: list[int] = []

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def insert(self, order: Order) -> None:
        """Append the order to the FIFO at its level and update quotes."""
        price = order.price
        if not self.band.min <= price <= self.band.max:
            raise PriceOutsideBand(
                f"price {price} outside [{self.band.min}, {self.band.max}]")
        if order.id in self._by_id:
            raise DuplicateId(f"order id {order.id} already resting")
        self._by_id[order.id] = order
        if order.side == BUY:
            q = self.bids.get(price)
            if q is None:
                self.bids[price] = deque((order,))
                self._bid_size[price] = order.remaining
                heapq.heappush(self._bid_heap, -price)
                if self.best_bid is None or price > self.best_bid:
                    self.best_bid = price
            else:
                q.append(order)
                self._bid_size[price] += order.remaining
        else:
            q = self.asks.get(price)
            if q is None:
                self.asks[price] = deque((order,))
                self._ask_size[price] = order.remaining
                heapq.heappush(self._ask_heap, price)
                if self.best_ask is None or price < self.best_ask:
                    self.best_ask = price
            else:
                q.append(order)
                self._ask_size[price] += order.remaining

    def cancel(self, order_id: int) -> Order:
        """Remove a resting order; queue order of the others is unchanged."""
        order = self._by_id.pop(order_id, None)
        if order is None:
            raise UnknownId(f"order id {order_id} not resting")
        price = order.price
        if order.side == BUY:
            q = self.bids[price]
            q.remove(order)
            if q:
                self._bid_size[price] -= order.remaining
            else:
                del self.bids[price]
                del self._bid_size[price]
                if price == self.best_bid:
                    self._refresh_best_bid()
        else:
            q = self.asks[price]
            q.remove(order)
            if q:
                self._ask_size[price] -= order.remaining
            else:
                del self.asks[price]
                del self._ask_size[price]
                if price == self.best_ask:
                    self._refresh_best_ask()
        return order

    def best_quotes(self) -> tuple[int | None, int | None]:
        """(best bid, best ask); None for an empty side."""
        return self.best_bid, self.best_ask

    def depth_at(self, side: int, rank: int) -> tuple[int, int]:
        """Price and aggregate resting size of the rank-th best level."""
        if rank < 1:
            raise ValueError(f"rank must be >= 1, got {rank}")
        if side == BUY:
            levels, sizes = self.bids, self._bid_size
            if len(levels) < rank:
                raise InsufficientDepth(f"{len(levels)} bid levels, need {rank}")
            price = heapq.nlargest(rank, levels)[-1]
        else:
            levels, sizes = self.asks, self._ask_size
            if len(levels) < rank:
                raise InsufficientDepth(f"{len(levels)} ask levels, need {rank}")
            price = heapq.nsmallest(rank, levels)[-1]
        return price, sizes[price]

    def resting_size(self, side: int) -> int:
        """Total unexecuted shares resting on one side."""
        sizes = self._bid_size if side == BUY else self._ask_size
        return sum(sizes.values())

    def snapshot(self):
        """Canonical immutable view: per-side (price, queue) tuples.

        Two books with equal snapshots behave identically; internal heap
        caches are excluded on purpose.
        """
        bids = tuple(
            (p, tuple((o.id, o.ts, o.seq, o.remaining) for o in self.bids[p]))
            for p in sorted(self.bids, reverse=True))
        asks = tuple(
            (p, tuple((o.id, o.ts, o.seq, o.remaining) for o in self.asks[p]))
            for p in sorted(self.asks))
        return bids, asks

    def __eq__(self, other) -> bool:
        if not isinstance(other, OrderBook):
            return NotImplemented
        return self.snapshot() == other.snapshot()

    def _refresh_best_bid(self) -> None:
        heap, levels = self._bid_heap, self.bids
        while heap:
            price = -heap[0]
            if price in levels:
                self.best_bid = price
                return
            heapq.heappop(heap)
        self.best_bid = None

    def _refresh_best_ask(self) -> None:
        heap, levels = self._ask_heap, self.asks
        while heap:
            price = heap[0]
            if price in levels:
                self.best_ask = price
                return
            heapq.heappop(heap)
        self.best_ask = None
