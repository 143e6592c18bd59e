"""Synthetic order flow with a configurable relative-price mixture.

Each placement draws a relative price x from a per-phase, per-side
mixture: a point mass at zero (orders pinned to the reference), two
truncated power-law bulks on [x_min, 0.1] (one per sign), an optional
point mass at the domain limit (maximally aggressive orders), and
exponential tails beyond |x| = 0.1 carrying the residual mass.  The
draw is converted back to a tick price against the reference in force,
so the generated flow is conditionally independent of spread and
volatility by construction.

Generation co-runs the session engine, so references evolve exactly as
they will during replay and a fixed seed reproduces the stream byte for
byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .book import BUY, SELL, Order
from .engine import DayEngine
from .errors import MissingReference
from .flowio import FlowRecord
from .market import (AFTERNOON_OPEN, CALL_OPEN, CALL_CLOSE, COOL_END,
                     DAY_END, MORNING_END, NO_CANCEL_FROM, REL_PRICE_LIMIT,
                     Phase, PriceBand, compute_band, log_price)

# The price-limit rule produces a kink here; the power-law bulk ends and
# the exponential tail takes over.
BULK_HI = 0.1

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class Mixture:
    """Relative-price mixture for one (phase, side) combination.

    p_zero, p_bulk_pos, p_bulk_neg, and p_max_boost must sum to at most
    one; the residual mass goes to the exponential tails, split evenly
    between the signs.
    """

    p_zero: float
    p_bulk_pos: float
    p_bulk_neg: float
    alpha_pos: float
    alpha_neg: float
    x_min: float = 0.002
    tail_lambda: float = 60.0
    p_max_boost: float = 0.0

    def __post_init__(self) -> None:
        masses = (self.p_zero, self.p_bulk_pos, self.p_bulk_neg, self.p_max_boost)
        if any(m < 0 or m > 1 for m in masses):
            raise ValueError(f"mixture masses must lie in [0, 1], got {masses}")
        if sum(masses) > 1 + _MASS_TOL:
            raise ValueError(f"mixture masses sum to {sum(masses)} > 1")
        if not (0 < self.x_min < BULK_HI):
            raise ValueError(f"x_min must lie in (0, {BULK_HI}), got {self.x_min}")
        if self.tail_lambda <= 0:
            raise ValueError(f"tail_lambda must be positive, got {self.tail_lambda}")
        if not (math.isfinite(self.alpha_pos) and math.isfinite(self.alpha_neg)):
            raise ValueError("bulk exponents must be finite")

    @property
    def p_tail(self) -> float:
        return max(0.0, 1.0 - self.p_zero - self.p_bulk_pos
                   - self.p_bulk_neg - self.p_max_boost)


def default_mixtures() -> dict[tuple[Phase, int], Mixture]:
    """Calibration defaults per (phase, side).

    The bulk exponents are the measured values this generator is meant
    to reproduce; the mass splits are free knobs chosen to give the
    qualitative shape (zero atom, heavier inside-the-book mass, visible
    tails near the price limit).
    """
    return {
        (Phase.CALL, BUY): Mixture(0.0346, 0.30, 0.55, 0.13, 0.80),
        (Phase.CALL, SELL): Mixture(0.0346, 0.30, 0.55, -0.31, 0.80),
        (Phase.COOL, BUY): Mixture(0.06, 0.35, 0.50, 1.89, 1.20),
        (Phase.COOL, SELL): Mixture(0.06, 0.35, 0.50, 1.66, 1.20),
        (Phase.CDA, BUY): Mixture(0.10, 0.38, 0.44, 1.66, 1.72),
        (Phase.CDA, SELL): Mixture(0.10, 0.38, 0.44, 1.80, 1.15),
    }


@dataclass(frozen=True)
class GeneratorConfig:
    """Full recipe for one synthetic trading day.

    mid_reversion tilts the buy probability toward the previous close
    when the mid-price drifts: without a restoring force a long run's
    mid performs a free random walk and eventually pins against the
    price band, where clamping distorts the measured distribution.  The
    draw of x itself never depends on state, so conditional
    independence of x from spread and volatility is preserved.
    """

    stock: str = "000001"
    prev_close: int = 5000
    n_call: int = 2000
    n_cool: int = 500
    n_cda: int = 20000
    cancel_fraction: float = 0.10
    buy_fraction: float = 0.50
    mid_reversion: float = 0.10
    size_min: int = 100
    size_max: int = 10_000
    seed: int = 0
    mixtures: dict[tuple[Phase, int], Mixture] = field(default_factory=default_mixtures)

    def __post_init__(self) -> None:
        if min(self.n_call, self.n_cool, self.n_cda) < 0:
            raise ValueError("phase counts must be non-negative")
        if not 0 <= self.cancel_fraction < 1:
            raise ValueError(f"cancel_fraction must lie in [0, 1), got {self.cancel_fraction}")
        if not 0 <= self.buy_fraction <= 1:
            raise ValueError(f"buy_fraction must lie in [0, 1], got {self.buy_fraction}")
        if not 0 <= self.mid_reversion <= 0.45:
            raise ValueError(f"mid_reversion must lie in [0, 0.45], got {self.mid_reversion}")
        if not 1 <= self.size_min <= self.size_max:
            raise ValueError("need 1 <= size_min <= size_max")


@dataclass(frozen=True)
class SyntheticStream:
    """Generated events plus the ground-truth config that made them."""

    records: list[FlowRecord]
    config: GeneratorConfig


def _pareto_icdf(u, a: float, b: float, alpha: float):
    """Inverse CDF of the density proportional to x^-(1+alpha) on [a, b].

    Valid for any finite alpha; alpha == 0 degenerates to log-uniform.
    """
    u = np.asarray(u, dtype=float)
    if alpha == 0.0:
        return a * (b / a) ** u
    fa = a ** -alpha
    fb = b ** -alpha
    return (fa - u * (fa - fb)) ** (-1.0 / alpha)


def sample_x(config: GeneratorConfig, phase: Phase, side: int,
             rng: np.random.Generator, n: int | None = None):
    """Draw relative prices from the configured mixture.

    Returns a scalar when n is None, else an array of n draws.  No draw
    ever exceeds the relative-price domain limit.
    """
    mix = config.mixtures[(phase, side)]
    count = 1 if n is None else int(n)
    u = rng.random(count)
    v = rng.random(count)
    x = np.zeros(count)
    c1 = mix.p_zero
    c2 = c1 + mix.p_bulk_pos
    c3 = c2 + mix.p_bulk_neg
    c4 = c3 + mix.p_max_boost
    c5 = c4 + mix.p_tail / 2.0
    mask = (u >= c1) & (u < c2)
    x[mask] = _pareto_icdf(v[mask], mix.x_min, BULK_HI, mix.alpha_pos)
    mask = (u >= c2) & (u < c3)
    x[mask] = -_pareto_icdf(v[mask], mix.x_min, BULK_HI, mix.alpha_neg)
    mask = (u >= c3) & (u < c4)
    x[mask] = REL_PRICE_LIMIT
    mask = (u >= c4) & (u < c5)
    x[mask] = np.minimum(BULK_HI - np.log1p(-v[mask]) / mix.tail_lambda,
                         REL_PRICE_LIMIT)
    mask = u >= c5
    x[mask] = -np.minimum(BULK_HI - np.log1p(-v[mask]) / mix.tail_lambda,
                          REL_PRICE_LIMIT)
    return float(x[0]) if n is None else x


def x_to_order(x: float, side: int, ref_ticks: int | None,
               band: PriceBand) -> int:
    """Tick price of an order placed at relative price x.

    Buys price above the reference for positive x, sells below; the
    yuan value rounds half-up to the tick grid and clamps to the band.
    """
    if ref_ticks is None:
        raise MissingReference("cannot price an order without a reference")
    log_p = log_price(ref_ticks) + (x if side == BUY else -x)
    ticks = int(math.floor(math.exp(log_p) * 100.0 + 0.5))
    if ticks < band.min:
        return band.min
    if ticks > band.max:
        return band.max
    return ticks


_PHASE_WINDOWS = {
    Phase.CALL: ((CALL_OPEN, CALL_CLOSE),),
    Phase.COOL: ((CALL_CLOSE, COOL_END),),
    Phase.CDA: ((COOL_END, MORNING_END), (AFTERNOON_OPEN, DAY_END)),
}

_CANCEL_WINDOWS = {
    Phase.CALL: ((CALL_OPEN, NO_CANCEL_FROM),),
    Phase.CDA: ((COOL_END, MORNING_END), (AFTERNOON_OPEN, DAY_END)),
}

_PHASE_CODE = {Phase.CALL: 0, Phase.COOL: 1, Phase.CDA: 2}
_CODE_PHASE = {v: k for k, v in _PHASE_CODE.items()}


def _draw_ts(rng: np.random.Generator, windows, n: int) -> np.ndarray:
    lengths = [hi - lo for lo, hi in windows]
    total = sum(lengths)
    u = rng.integers(0, total, size=n)
    ts = np.empty(n, dtype=np.int64)
    offset = 0
    for (lo, hi), length in zip(windows, lengths):
        mask = (u >= offset) & (u < offset + length)
        ts[mask] = lo + (u[mask] - offset)
        offset += length
    return ts


def generate_day(config: GeneratorConfig) -> SyntheticStream:
    """Emit a full synthetic day, co-running the session engine.

    Placements draw x against the reference the engine would report at
    that instant (previous-close fallback while none exists, e.g. the
    first call-auction orders).  Cancels target random resting orders
    and are only scheduled in windows where cancelation is legal.
    Identical configs produce identical streams.
    """
    rng = np.random.default_rng(config.seed)
    band = compute_band(config.prev_close)
    one_tick = math.log1p(1.0 / band.min)
    for (phase, side), mix in config.mixtures.items():
        if mix.x_min < one_tick:
            raise ValueError(
                f"{phase.value}/{side} x_min {mix.x_min:.6f} is below the "
                f"one-tick log distance {one_tick:.6f} at the band edge")

    counts = {Phase.CALL: config.n_call, Phase.COOL: config.n_cool,
              Phase.CDA: config.n_cda}
    ts_parts, kind_parts, phase_parts = [], [], []
    for phase in (Phase.CALL, Phase.COOL, Phase.CDA):
        n = counts[phase]
        if n == 0:
            continue
        ts_parts.append(_draw_ts(rng, _PHASE_WINDOWS[phase], n))
        kind_parts.append(np.zeros(n, dtype=np.int8))
        phase_parts.append(np.full(n, _PHASE_CODE[phase], dtype=np.int8))
        if phase in _CANCEL_WINDOWS and config.cancel_fraction > 0:
            n_cancel = int(round(n * config.cancel_fraction))
            if n_cancel:
                ts_parts.append(_draw_ts(rng, _CANCEL_WINDOWS[phase], n_cancel))
                kind_parts.append(np.ones(n_cancel, dtype=np.int8))
                phase_parts.append(np.full(n_cancel, _PHASE_CODE[phase], dtype=np.int8))
    if not ts_parts:
        return SyntheticStream([], config)

    ts_all = np.concatenate(ts_parts)
    kind_all = np.concatenate(kind_parts)
    phase_all = np.concatenate(phase_parts)
    order = np.lexsort((kind_all, ts_all))
    ts_all, kind_all, phase_all = ts_all[order], kind_all[order], phase_all[order]

    n_places = int(np.sum(kind_all == 0))
    sizes = np.exp(rng.uniform(math.log(config.size_min),
                               math.log(config.size_max), n_places))
    sizes = np.clip(np.floor(sizes).astype(np.int64),
                    config.size_min, config.size_max)

    # Relative prices are drawn lazily in chunks because the side of
    # each placement depends on the evolving mid (mid_reversion).
    pools = {(_PHASE_CODE[phase], side): _XPool(config, phase, side, rng)
             for phase in Phase for side in (BUY, SELL)}

    engine = DayEngine(config.prev_close)
    anchor = log_price(config.prev_close)
    # mid_reversion is the buy-probability tilt per 0.5% of log deviation
    # between the mid and the previous close.
    gain = config.mid_reversion / 0.005
    records: list[FlowRecord] = []
    placed_ids: list[int] = []
    stock = config.stock
    next_id = 1
    seq = 0
    place_idx = 0
    for i in range(ts_all.size):
        ts = int(ts_all[i])
        if not engine.cool_flushed:
            engine.advance_to(ts)
        phase = _CODE_PHASE[int(phase_all[i])]
        if kind_all[i] == 1:
            target = _pick_resting(rng, placed_ids, engine, phase)
            if target is None:
                continue
            seq += 1
            engine.cancel(ts, target, phase)
            records.append(FlowRecord(stock, ts, seq, "C", target))
            continue
        p_buy = config.buy_fraction
        if gain:
            mark = engine.mark_price(phase)
            if mark is not None:
                # linear restoring tilt, growing until the probability
                # clamps: a plateau would let the mid escape and trend
                p_buy += gain * (anchor - mark)
                if p_buy < 0.05:
                    p_buy = 0.05
                elif p_buy > 0.95:
                    p_buy = 0.95
        side = BUY if rng.random() < p_buy else SELL
        ref = engine.ref_tick(phase, side)
        if ref is None:
            ref = config.prev_close
        x = pools[(_PHASE_CODE[phase], side)].take()
        price = x_to_order(x, side, ref, band)
        size = int(sizes[place_idx])
        place_idx += 1
        seq += 1
        order_id = next_id
        next_id += 1
        engine.place(Order(order_id, ts, seq, side, price, size), phase)
        placed_ids.append(order_id)
        records.append(FlowRecord(stock, ts, seq, "P", order_id, side, price, size))
    return SyntheticStream(records, config)


class _XPool:
    """Chunked lazy draws of relative prices for one (phase, side)."""

    __slots__ = ("_config", "_phase", "_side", "_rng", "_buf", "_pos", "_chunk")

    def __init__(self, config: GeneratorConfig, phase: Phase, side: int,
                 rng: np.random.Generator, chunk: int = 8192) -> None:
        self._config = config
        self._phase = phase
        self._side = side
        self._rng = rng
        self._chunk = chunk
        self._buf = np.empty(0)
        self._pos = 0

    def take(self) -> float:
        if self._pos >= self._buf.size:
            self._buf = sample_x(self._config, self._phase, self._side,
                                 self._rng, self._chunk)
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return float(value)


def _pick_resting(rng: np.random.Generator, placed_ids: list[int],
                  engine: DayEngine, phase: Phase) -> int | None:
    """Random currently-resting order id, or None after a few misses."""
    if not placed_ids:
        return None
    alive = engine.call if phase is Phase.CALL else engine.book
    count = len(placed_ids)
    for _ in range(32):
        oid = placed_ids[int(rng.random() * count)]
        if oid in alive:
            return oid
    return None


# Flat key = value config file support.

_SIDE_NAME = {BUY: "buy", SELL: "sell"}
_NAME_SIDE = {"buy": BUY, "sell": SELL}
_SCALAR_FIELDS = {
    "stock": str,
    "prev_close": int,
    "n_call": int,
    "n_cool": int,
    "n_cda": int,
    "cancel_fraction": float,
    "buy_fraction": float,
    "mid_reversion": float,
    "size_min": int,
    "size_max": int,
    "seed": int,
}
_MIXTURE_FIELDS = {f.name: float for f in fields(Mixture)}


def config_to_text(config: GeneratorConfig) -> str:
    """Flat key = value rendering, the sidecar metadata format."""
    lines = [f"{name} = {getattr(config, name)}" for name in _SCALAR_FIELDS]
    for phase in (Phase.CALL, Phase.COOL, Phase.CDA):
        for side in (BUY, SELL):
            mix = config.mixtures[(phase, side)]
            prefix = f"{phase.value}.{_SIDE_NAME[side]}"
            for name in _MIXTURE_FIELDS:
                lines.append(f"{prefix}.{name} = {getattr(mix, name)}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> GeneratorConfig:
    """Parse the flat key = value format; unknown keys are an error."""
    scalars: dict[str, object] = {}
    mix_overrides: dict[tuple[Phase, int], dict[str, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _SCALAR_FIELDS:
            scalars[key] = _SCALAR_FIELDS[key](value)
            continue
        parts = key.split(".")
        if len(parts) == 3 and parts[2] in _MIXTURE_FIELDS:
            try:
                phase = Phase(parts[0])
                side = _NAME_SIDE[parts[1]]
            except (ValueError, KeyError):
                raise ValueError(f"config line {lineno}: unknown key {key!r}") from None
            mix_overrides.setdefault((phase, side), {})[parts[2]] = float(value)
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    mixtures = default_mixtures()
    for key, overrides in mix_overrides.items():
        mixtures[key] = replace(mixtures[key], **overrides)
    return GeneratorConfig(mixtures=mixtures, **scalars)


def load_config(path) -> GeneratorConfig:
    return config_from_text(Path(path).read_text(encoding="utf-8"))
