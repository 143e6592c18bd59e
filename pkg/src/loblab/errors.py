"""Exception types shared across the package.

Per-event failures (bad price, forbidden cancel, unknown id) derive from
LobLabError so the replay driver can log and skip them without halting
the stream.
"""


class LobLabError(Exception):
    """Base class for all package errors."""


class PriceOutsideBand(LobLabError):
    """Order price falls outside the day's admissible band."""


class DuplicateId(LobLabError):
    """Order id already known to the engine."""


class UnknownId(LobLabError):
    """Cancel refers to an id that is not resting."""


class InsufficientDepth(LobLabError):
    """Book side has fewer distinct levels than requested."""


class CancelForbidden(LobLabError):
    """Cancelation not allowed in the current session window."""


class OutsideTradingHours(LobLabError):
    """Event timestamp falls outside every session window."""


class MissingReference(LobLabError):
    """No reference price is defined for this placement."""


class MissingQuote(LobLabError):
    """A best quote needed for the computation is absent."""


class MissingContext(LobLabError):
    """Sample lacks the pre-placement context being conditioned on."""


class InsufficientHistory(LobLabError):
    """Not enough observations to fill the rolling window."""


class EmptySample(LobLabError):
    """Operation requires at least one sample."""


class InsufficientRange(LobLabError):
    """Fit range does not yield enough populated bins."""


class EmptyBins(LobLabError):
    """No samples fall inside the requested range."""


class MalformedLine(LobLabError):
    """A flow-file line failed validation."""

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


class UnsortedStream(LobLabError):
    """Flow records are not (ts, seq) non-decreasing."""
