"""Exception types shared across the package."""


class BetmartError(Exception):
    """Base class for all betmart-specific errors."""


class ConfigError(BetmartError, ValueError):
    """A test configuration violates its invariants."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class ObservationOutOfBounds(BetmartError, ValueError):
    """An observation lies outside the configured support bounds."""

    def __init__(self, value: float, index: int | None = None, detail: str = "") -> None:
        self.value = value
        self.index = index
        where = f" at index {index}" if index is not None else ""
        super().__init__(f"observation {value!r}{where} outside configured bounds{': ' + detail if detail else ''}")


class InvalidStake(BetmartError, ValueError):
    """A stake falls outside the admissible range."""


class StreamDesync(BetmartError, ValueError):
    """Two martingale states built from the same stream disagree on the step count."""


class NoPositiveGrowth(BetmartError, ValueError):
    """The distribution mean is at or above the null, so no stake has positive log growth."""


class NeverRejects(BetmartError, ValueError):
    """A deterministic stream whose update factor never exceeds one cannot reach the threshold."""


class AllNodesAbsorbed(BetmartError, ValueError):
    """Every quadrature node of a mixture has been driven to zero."""


class StateSpaceLimit(BetmartError, ValueError):
    """The exact stopping-time recursion would exceed its state-space budget."""


class ScheduleExhausted(BetmartError, ValueError):
    """A stake schedule ran out of entries before the stream ended."""


class ConflictError(BetmartError):
    """Optimistic-concurrency token mismatch on a session mutation."""


class SessionNotFound(BetmartError, KeyError):
    """No session with the requested id."""
