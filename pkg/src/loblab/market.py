"""Tick-grid price arithmetic, daily price bands, and the session clock.

Prices are stored as integer tick counts everywhere (1 tick = 0.01 yuan);
logarithmic prices are derived on demand.  Timestamps are centiseconds
since midnight, so one unit is exactly 0.01 s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

TICK_YUAN = 0.01
_LOG_TICK = math.log(TICK_YUAN)

# Widest admissible relative log distance under the +/-10% daily limit,
# before tick rounding at the band edges: ln(1.1/0.9) ~ 0.2007.
REL_PRICE_LIMIT = math.log(1.1 / 0.9)


def _cs(hour: int, minute: int = 0) -> int:
    """Centiseconds since midnight for a wall-clock time."""
    return (hour * 3600 + minute * 60) * 100


CALL_OPEN = _cs(9, 15)
NO_CANCEL_FROM = _cs(9, 20)
CALL_CLOSE = _cs(9, 25)
COOL_END = _cs(9, 30)
MORNING_END = _cs(11, 30)
AFTERNOON_OPEN = _cs(13, 0)
DAY_END = _cs(15, 0)


class Phase(Enum):
    """Session phase labels; the values appear in sample exports."""

    CALL = "call"
    COOL = "cool"
    CDA = "cda"


@dataclass(frozen=True, slots=True)
class PriceBand:
    """Admissible tick-price interval for one trading day."""

    prev_close: int
    min: int
    max: int


def compute_band(prev_close: int) -> PriceBand:
    """Daily band [round(0.9 p), round(1.1 p)] around the previous close.

    Rounding is half-up on the tick grid, evaluated in integer
    arithmetic so exact half ticks (e.g. 949.5) never fall prey to
    float representation.
    """
    if prev_close < 1:
        raise ValueError(f"previous close must be at least one tick, got {prev_close}")
    lo = (9 * prev_close + 5) // 10
    hi = (11 * prev_close + 5) // 10
    return PriceBand(prev_close, lo, hi)


def log_price(ticks: int) -> float:
    """Natural logarithm of the yuan price for a tick count."""
    if ticks < 1:
        raise ValueError(f"price must be at least one tick, got {ticks}")
    return math.log(ticks) + _LOG_TICK


def domain_bound(band: PriceBand) -> float:
    """Upper bound on |x| for relative prices within this band.

    Band edges are rounded to the tick grid, so the exact 10% log width
    can be exceeded by up to the log width of one tick at the boundary.
    """
    return REL_PRICE_LIMIT + math.log1p(1.0 / band.min)


def phase_of(ts: int) -> Phase | None:
    """Map a centisecond timestamp to its session phase.

    Windows are half-open: 9:15-9:25 call auction, 9:25-9:30 cool
    period, 9:30-11:30 and 13:00-15:00 continuous auction.  Times
    outside all windows (including the lunch break) return None.
    """
    if ts < CALL_OPEN:
        return None
    if ts < CALL_CLOSE:
        return Phase.CALL
    if ts < COOL_END:
        return Phase.COOL
    if ts < MORNING_END:
        return Phase.CDA
    if ts < AFTERNOON_OPEN:
        return None
    if ts < DAY_END:
        return Phase.CDA
    return None


def fmt_ts(ts: int) -> str:
    """Human-readable HH:MM:SS.cc for log and figure labels."""
    cs = ts % 100
    s = ts // 100
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}.{cs:02d}"
