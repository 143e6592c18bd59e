"""Order-flow file format: one delimited record per event.

The schema carries exactly the fields the engine consumes.  Placements
fill every column; cancels leave side/price_ticks/size empty.  Files
must be sorted by (ts_cs, seq) and events within one stock are totally
ordered by that pair.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import MalformedLine, UnsortedStream

FLOW_HEADER = "stock,ts_cs,seq,action,order_id,side,price_ticks,size"

_SIDE_CODE = {1: "B", -1: "S"}
_SIDE_VALUE = {"B": 1, "S": -1}


@dataclass(slots=True)
class FlowRecord:
    """One order-flow event; side/price/size are None for cancels."""

    stock: str
    ts: int
    seq: int
    action: str  # "P" place, "C" cancel
    order_id: int
    side: int | None = None
    price: int | None = None
    size: int | None = None


def parse_flow(source) -> Iterator[FlowRecord]:
    """Stream validated records from a flow file.

    source may be a path or an open text file.  Malformed lines raise
    MalformedLine with their line number; a decrease in (ts, seq) raises
    UnsortedStream.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            yield from _parse(handle)
    else:
        yield from _parse(source)


def _parse(handle) -> Iterator[FlowRecord]:
    header = handle.readline().rstrip("\r\n")
    if header != FLOW_HEADER:
        raise MalformedLine(1, f"expected header {FLOW_HEADER!r}, got {header!r}")
    last_ts = -1
    last_seq = -1
    for lineno, line in enumerate(handle, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise MalformedLine(lineno, f"expected 8 fields, got {len(fields)}")
        stock, ts_s, seq_s, action, oid_s, side_s, price_s, size_s = fields
        try:
            ts = int(ts_s)
            seq = int(seq_s)
            order_id = int(oid_s)
        except ValueError as exc:
            raise MalformedLine(lineno, f"non-integer field: {exc}") from None
        if ts < 0:
            raise MalformedLine(lineno, f"negative timestamp {ts}")
        if (ts, seq) < (last_ts, last_seq):
            raise UnsortedStream(
                f"line {lineno}: ({ts}, {seq}) after ({last_ts}, {last_seq})")
        last_ts, last_seq = ts, seq
        if action == "P":
            side = _SIDE_VALUE.get(side_s)
            if side is None:
                raise MalformedLine(lineno, f"side must be B or S, got {side_s!r}")
            try:
                price = int(price_s)
                size = int(size_s)
            except ValueError as exc:
                raise MalformedLine(lineno, f"non-integer field: {exc}") from None
            if price < 1:
                raise MalformedLine(lineno, f"price must be >= 1 tick, got {price}")
            if size < 1:
                raise MalformedLine(lineno, f"size must be positive, got {size}")
            yield FlowRecord(stock, ts, seq, "P", order_id, side, price, size)
        elif action == "C":
            if side_s or price_s or size_s:
                raise MalformedLine(lineno, "cancel must leave side/price/size empty")
            yield FlowRecord(stock, ts, seq, "C", order_id)
        else:
            raise MalformedLine(lineno, f"action must be P or C, got {action!r}")


def format_record(rec: FlowRecord) -> str:
    """Single-line wire form of a record, without the newline."""
    if rec.action == "P":
        return (f"{rec.stock},{rec.ts},{rec.seq},P,{rec.order_id},"
                f"{_SIDE_CODE[rec.side]},{rec.price},{rec.size}")
    return f"{rec.stock},{rec.ts},{rec.seq},C,{rec.order_id},,,"


def write_flow(records: Iterable[FlowRecord], dest) -> None:
    """Serialize records; the output parses back to identical records."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as handle:
            _write(records, handle)
    else:
        _write(records, dest)


def _write(records: Iterable[FlowRecord], handle: io.TextIOBase) -> None:
    handle.write(FLOW_HEADER + "\n")
    for rec in records:
        handle.write(format_record(rec) + "\n")


def load_flow(source) -> list[FlowRecord]:
    """Materialize a whole flow file."""
    return list(parse_flow(source))


def demux(records: Iterable[FlowRecord]) -> dict[str, list[FlowRecord]]:
    """Group records per stock code, preserving order within each."""
    out: dict[str, list[FlowRecord]] = {}
    for rec in records:
        out.setdefault(rec.stock, []).append(rec)
    return out
