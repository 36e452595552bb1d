"""Test configuration, observation validation, and stake policies.

A test is parameterized by the null mean ``mu``, the support bounds
``tau0``/``tau1`` (whichever the side needs), the level ``alpha``, and the
side of the null hypothesis. Observations are plain floats; taintings in
the audit setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from betmart.errors import ConfigError, InvalidStake, ObservationOutOfBounds, ScheduleExhausted


class Side(str, Enum):
    """Which null hypothesis the martingale is built against.

    UPPER_NULL tests "mean >= mu" (needs tau1), LOWER_NULL tests
    "mean <= mu" (needs tau0), TWO_SIDED tests "mean == mu" (needs both and
    a convex weight rho_plus on the upper-null component).
    """

    UPPER_NULL = "upper"
    LOWER_NULL = "lower"
    TWO_SIDED = "two-sided"


@dataclass(frozen=True)
class TestConfig:
    mu: float
    alpha: float
    tau0: float | None = None
    tau1: float | None = None
    side: Side = Side.UPPER_NULL
    rho_plus: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha", f"must be in (0, 1), got {self.alpha}")
        if not math.isfinite(self.mu):
            raise ConfigError("mu", "must be finite")
        if self.tau0 is not None and self.tau1 is not None and not self.tau0 < self.tau1:
            raise ConfigError("tau0", f"tau0={self.tau0} must be below tau1={self.tau1}")
        side = self.side
        if side in (Side.UPPER_NULL, Side.TWO_SIDED):
            if self.tau1 is None:
                raise ConfigError("tau1", f"required for side={side.value}")
            if not self.mu < self.tau1:
                raise ConfigError("mu", f"must be below tau1={self.tau1}, got {self.mu}")
        if side in (Side.LOWER_NULL, Side.TWO_SIDED):
            if self.tau0 is None:
                raise ConfigError("tau0", f"required for side={side.value}")
            if not self.mu > self.tau0:
                raise ConfigError("mu", f"must be above tau0={self.tau0}, got {self.mu}")
        if side is Side.TWO_SIDED:
            if self.rho_plus is None or not (0.0 <= self.rho_plus <= 1.0):
                raise ConfigError("rho_plus", f"must be in [0, 1] for two-sided tests, got {self.rho_plus}")
        elif self.rho_plus is not None:
            raise ConfigError("rho_plus", "only meaningful for two-sided tests")

    @property
    def rho_minus(self) -> float | None:
        return None if self.rho_plus is None else 1.0 - self.rho_plus

    @property
    def log_threshold(self) -> float:
        """log(1/alpha), the rejection threshold for the running maximum."""
        return -math.log(self.alpha)


def validate_observation(t: float, cfg: TestConfig, index: int | None = None) -> float:
    """Check a single observation against whichever bounds are configured."""
    t = float(t)
    if math.isnan(t):
        raise ObservationOutOfBounds(t, index, "NaN observation")
    if cfg.tau0 is not None and t < cfg.tau0:
        raise ObservationOutOfBounds(t, index, f"below tau0={cfg.tau0}")
    if cfg.tau1 is not None and t > cfg.tau1:
        raise ObservationOutOfBounds(t, index, f"above tau1={cfg.tau1}")
    return t


def validate_stake(c: float) -> float:
    c = float(c)
    if not (0.0 <= c <= 1.0) or math.isnan(c):
        raise InvalidStake(f"stake must be in [0, 1], got {c}")
    return c


@dataclass(frozen=True)
class ConstantStake:
    """The same stake c at every step."""

    c: float

    def __post_init__(self) -> None:
        validate_stake(self.c)

    def stake_at(self, k: int) -> float:
        return self.c


@dataclass(frozen=True)
class StakeSchedule:
    """A predictable stake sequence fixed up front; cs[k] is used for step k+1."""

    cs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cs", tuple(float(c) for c in self.cs))
        for c in self.cs:
            validate_stake(c)

    def stake_at(self, k: int) -> float:
        if k >= len(self.cs):
            raise ScheduleExhausted(f"schedule has {len(self.cs)} stakes, step {k + 1} requested")
        return self.cs[k]


def as_observations(values: Sequence[float], cfg: TestConfig) -> list[float]:
    """Validate a whole stream, reporting the first offending index."""
    return [validate_observation(t, cfg, index=i) for i, t in enumerate(values)]
