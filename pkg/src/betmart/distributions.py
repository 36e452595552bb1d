"""Observation distributions used by the analysis and simulation layers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from betmart.config import TestConfig
from betmart.errors import ObservationOutOfBounds


@dataclass(frozen=True)
class Alt:
    """Two-point distribution on {0, 1} with success probability nu."""

    nu: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.nu <= 1.0):
            raise ValueError(f"nu must be in [0, 1], got {self.nu}")


@dataclass(frozen=True)
class ScaledAlt:
    """Takes `value` with probability `prob`, else 0 (e.g. 5T ~ Alt(p))."""

    value: float
    prob: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.prob <= 1.0):
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")


@dataclass(frozen=True)
class BetaDist:
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError("Beta parameters must be positive")


@dataclass(frozen=True)
class PointMass:
    t: float


@dataclass(frozen=True)
class FiniteSupport:
    points: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(float(x) for x in self.points))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.points) != len(self.probs) or not self.points:
            raise ValueError("points and probs must be equal-length and non-empty")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")


DistributionSpec = Union[Alt, ScaledAlt, BetaDist, PointMass, FiniteSupport]


def mean(dist: DistributionSpec) -> float:
    if isinstance(dist, Alt):
        return dist.nu
    if isinstance(dist, ScaledAlt):
        return dist.value * dist.prob
    if isinstance(dist, BetaDist):
        return dist.a / (dist.a + dist.b)
    if isinstance(dist, PointMass):
        return dist.t
    return float(sum(p * t for t, p in zip(dist.points, dist.probs)))


def finite_points(dist: DistributionSpec) -> tuple[tuple[float, ...], tuple[float, ...]] | None:
    """(points, probs) for finite-support distributions, None for Beta.

    Zero-probability endpoints are dropped so degenerate cases (nu in {0,1})
    collapse to point masses.
    """
    if isinstance(dist, Alt):
        pairs = [(0.0, 1.0 - dist.nu), (1.0, dist.nu)]
    elif isinstance(dist, ScaledAlt):
        pairs = [(0.0, 1.0 - dist.prob), (dist.value, dist.prob)]
    elif isinstance(dist, PointMass):
        pairs = [(dist.t, 1.0)]
    elif isinstance(dist, FiniteSupport):
        pairs = list(zip(dist.points, dist.probs))
    else:
        return None
    pairs = [(t, p) for t, p in pairs if p > 0.0]
    return tuple(t for t, _ in pairs), tuple(p for _, p in pairs)


def support_range(dist: DistributionSpec) -> tuple[float, float]:
    pts = finite_points(dist)
    if pts is None:
        return (0.0, 1.0)
    return (min(pts[0]), max(pts[0]))


def check_support(dist: DistributionSpec, cfg: TestConfig) -> None:
    lo, hi = support_range(dist)
    if cfg.tau1 is not None and hi > cfg.tau1:
        raise ObservationOutOfBounds(hi, None, f"distribution support exceeds tau1={cfg.tau1}")
    if cfg.tau0 is not None and lo < cfg.tau0:
        raise ObservationOutOfBounds(lo, None, f"distribution support below tau0={cfg.tau0}")


def sample(dist: DistributionSpec, n: int, rng: np.random.Generator | int) -> np.ndarray:
    """Draw n observations, reproducibly for a given seed or generator."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if isinstance(dist, Alt):
        return (rng.random(n) < dist.nu).astype(float)
    if isinstance(dist, ScaledAlt):
        return np.where(rng.random(n) < dist.prob, dist.value, 0.0)
    if isinstance(dist, BetaDist):
        return rng.beta(dist.a, dist.b, size=n)
    if isinstance(dist, PointMass):
        return np.full(n, float(dist.t))
    points = np.asarray(dist.points)
    probs = np.asarray(dist.probs)
    return points[rng.choice(len(points), size=n, p=probs / probs.sum())]
