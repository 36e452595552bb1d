"""Integrated (mixture) test martingales over a density on the stake.

Instead of committing to one stake c, the martingale is integrated against
a density pi on stakes: M_k(pi) = integral of M_k(c) pi(c) dc. One-sided
testing uses support inside [0, 1]; the confidence-interval construction
uses a two-sided support inside [-1, 1], where a negative node c applies
the lower-branch factor with stake |c|.

The integral is discretized once on fixed Gauss-Legendre nodes (per sign
region) and never re-gridded mid-stream, which would break the
predictability of the implied stake process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from betmart import kernels
from betmart.config import TestConfig, validate_observation
from betmart.errors import AllNodesAbsorbed

DEFAULT_NODE_COUNT = 64
_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class WeightedNodes:
    """Discrete stake density: explicit nodes with positive weights summing to 1."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(float(x) for x in self.nodes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ValueError("nodes and weights must be equal-length and non-empty")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if abs(sum(self.weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {_WEIGHT_TOL}")


@dataclass(frozen=True)
class MixtureSpec:
    support: tuple[float, float] = (0.0, 1.0)
    density: Literal["uniform"] | WeightedNodes = "uniform"

    def __post_init__(self) -> None:
        a, b = (float(self.support[0]), float(self.support[1]))
        object.__setattr__(self, "support", (a, b))
        if not (-1.0 <= a < b <= 1.0):
            raise ValueError(f"support must satisfy -1 <= a < b <= 1, got [{a}, {b}]")
        if isinstance(self.density, WeightedNodes):
            if any(not (a <= c <= b) for c in self.density.nodes):
                raise ValueError("weighted nodes must lie within the support")
        elif self.density != "uniform":
            raise ValueError(f"unknown density {self.density!r}")

    @property
    def two_sided(self) -> bool:
        return self.support[0] < 0.0

    def positive_mass(self) -> float:
        """Density mass on stakes >= 0."""
        a, b = self.support
        if isinstance(self.density, WeightedNodes):
            return sum(w for c, w in zip(self.density.nodes, self.density.weights) if c >= 0)
        if a >= 0.0:
            return 1.0
        if b <= 0.0:
            return 0.0
        return b / (b - a)

    def to_json(self) -> dict:
        density = (
            "uniform"
            if self.density == "uniform"
            else {"nodes": list(self.density.nodes), "weights": list(self.density.weights)}
        )
        return {"support": [self.support[0], self.support[1]], "density": density}

    @classmethod
    def from_json(cls, obj: dict) -> "MixtureSpec":
        density = obj.get("density", "uniform")
        if isinstance(density, dict):
            density = WeightedNodes(tuple(density["nodes"]), tuple(density["weights"]))
        return cls(support=tuple(obj["support"]), density=density)


@dataclass(frozen=True, eq=False)
class MixtureState:
    """Fixed quadrature grid plus per-node running log values."""

    nodes: np.ndarray
    log_weights: np.ndarray
    log_vals: np.ndarray
    k: int = 0


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=256)
def _grid_cached(spec: MixtureSpec, node_count: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = _build_grid(spec, node_count)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def grid_for(spec: MixtureSpec, node_count: int = DEFAULT_NODE_COUNT) -> tuple[np.ndarray, np.ndarray]:
    """Cached (nodes, weights); the arrays are read-only."""
    return _grid_cached(spec, node_count)


def _build_grid(spec: MixtureSpec, node_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and probability weights realizing the density.

    Uniform densities get Gauss-Legendre panels, one per sign region so a
    node never straddles the branch switch at c = 0.
    """
    if isinstance(spec.density, WeightedNodes):
        return (
            np.asarray(spec.density.nodes, dtype=float),
            np.asarray(spec.density.weights, dtype=float),
        )
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    a, b = spec.support
    length = b - a
    panels = []
    if a < 0.0:
        panels.append((a, min(b, 0.0)))
    if b > 0.0:
        panels.append((max(a, 0.0), b))
    nodes = []
    weights = []
    for lo, hi in panels:
        x, w = _gauss_legendre(lo, hi, node_count)
        nodes.append(x)
        weights.append(w / length)
    return np.concatenate(nodes), np.concatenate(weights)


def branch_denominators(nodes: np.ndarray, mu: float, tau0: float | None, tau1: float | None) -> tuple[float, float]:
    """(denom for stakes >= 0, denom for stakes < 0), validating the bounds.

    Positive stakes bet against the upper bound (denominator tau1 - mu),
    negative ones against the lower bound (mu - tau0) with stake |c|; the
    factor is 1 - c (t - mu)/denom either way. Unused branches get a
    placeholder denominator of 1.
    """
    denom_pos = denom_neg = 1.0
    if np.any(nodes >= 0.0):
        if tau1 is None:
            raise ValueError("positive stakes need tau1")
        denom_pos = tau1 - mu
    if np.any(nodes < 0.0):
        if tau0 is None:
            raise ValueError("negative stakes need tau0")
        denom_neg = mu - tau0
    return denom_pos, denom_neg


def node_log_factors(nodes: np.ndarray, t: float, mu: float, denom_pos: float, denom_neg: float) -> np.ndarray:
    """Per-node log factors for one observation; exact -inf on zero factors."""
    r = np.where(nodes >= 0.0, (t - mu) / denom_pos, (t - mu) / denom_neg)
    f = 1.0 - nodes * r
    with np.errstate(divide="ignore"):
        return np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), -np.inf)


def mixture_init(spec: MixtureSpec, node_count: int = DEFAULT_NODE_COUNT) -> MixtureState:
    nodes, weights = grid_for(spec, node_count)
    state = MixtureState(
        nodes=nodes,
        log_weights=np.log(weights),
        log_vals=np.zeros_like(nodes),
        k=0,
    )
    for arr in (state.nodes, state.log_weights, state.log_vals):
        arr.flags.writeable = False
    return state


def mixture_update(mstate: MixtureState, t: float, cfg: TestConfig) -> MixtureState:
    """Multiply every node's martingale by its sign-appropriate factor."""
    t = validate_observation(t, cfg)
    denom_pos, denom_neg = branch_denominators(mstate.nodes, cfg.mu, cfg.tau0, cfg.tau1)
    new_vals = mstate.log_vals + node_log_factors(mstate.nodes, t, cfg.mu, denom_pos, denom_neg)
    new_vals.flags.writeable = False
    return MixtureState(mstate.nodes, mstate.log_weights, new_vals, mstate.k + 1)


def mixture_extend(mstate: MixtureState, ts: Sequence[float], cfg: TestConfig) -> MixtureState:
    """Fold a whole stream through the kernel backend (same result as
    repeated mixture_update, minus the per-call overhead)."""
    arr = np.ascontiguousarray(ts, dtype=float)
    for i, t in enumerate(arr):
        validate_observation(float(t), cfg, index=i)
    denom_pos, denom_neg = branch_denominators(mstate.nodes, cfg.mu, cfg.tau0, cfg.tau1)
    vals = mstate.log_vals.copy()
    kernels.mixture_advance(arr, mstate.nodes, cfg.mu, denom_pos, denom_neg, vals)
    vals.flags.writeable = False
    return MixtureState(mstate.nodes, mstate.log_weights, vals, mstate.k + len(arr))


def mixture_value(mstate: MixtureState) -> float:
    """log M_k(pi): log-sum-exp of node values against the weights."""
    v = mstate.log_weights + mstate.log_vals
    hi = float(np.max(v))
    if hi == -math.inf:
        return -math.inf
    return hi + math.log(float(np.exp(v - hi).sum()))


def effective_c(mstate: MixtureState) -> float:
    """Mean stake under the posterior-like density f_k(c) ~ M_k(c) pi(c).

    This is exactly the stake the mixture implicitly plays next, by the
    one-step recursion M_k(pi) = M_{k-1}(pi) (1 - c_eff (t_k - mu)/(tau1 - mu)).
    """
    v = mstate.log_weights + mstate.log_vals
    hi = float(np.max(v))
    if hi == -math.inf:
        raise AllNodesAbsorbed("every node has been driven to zero; effective stake undefined")
    w = np.exp(v - hi)
    return float((w * mstate.nodes).sum() / w.sum())
