"""Always-valid confidence upper bounds and two-sided intervals.

A "suitable" family keeps one test martingale per candidate mean mu, with
the martingale value continuous and increasing in mu. The upper bound at
step k is the smallest mu whose martingale has reached 1/alpha; its
running minimum stays a valid (1-alpha) upper bound at any stopping time.
Two-sided intervals come from a mixture over stakes in [-1, 1], whose
value is convex in mu and at most 1 at the sample mean, so the crossing
points bracket an interval containing the sample mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from betmart import kernels
from betmart.config import ConstantStake, StakeSchedule, TestConfig, as_observations
from betmart.mixtures import (
    DEFAULT_NODE_COUNT,
    MixtureSpec,
    branch_denominators,
    grid_for,
)

_MU_TOL = 1e-8
_EDGE = 1e-9


@dataclass(frozen=True)
class PowerFamily:
    """Mean-dependent stake c(mu) = d (tau1 - mu)^r / (mu - tau0)^s.

    Only applied for mu >= tau0 + m; the cap d <= m^s / (tau1 - tau0 - m)^r
    keeps the stake within [0, 1] on that range.
    """

    d: float
    r: float
    s: float
    m: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.r <= 1.0 and 0.0 <= self.s <= 1.0):
            raise ValueError("exponents r, s must be in [0, 1]")
        if self.m <= 0.0:
            raise ValueError("m must be positive")
        if self.d < 0.0:
            raise ValueError("d must be nonnegative")

    def d_cap(self, cfg: TestConfig) -> float:
        return self.m**self.s / (cfg.tau1 - cfg.tau0 - self.m) ** self.r

    def c_at(self, mu: float, cfg: TestConfig) -> float:
        if cfg.tau0 is None or cfg.tau1 is None:
            raise ValueError("power family needs both bounds")
        return self.d * (cfg.tau1 - mu) ** self.r / (mu - cfg.tau0) ** self.s


CPolicy = ConstantStake | StakeSchedule | MixtureSpec | PowerFamily


class BoundMode(str, Enum):
    AT_K = "at_k"
    RUNNING = "running"


@dataclass(frozen=True)
class PolicyReport:
    ok: bool
    first_violation: tuple[float, str] | None = None

    def __bool__(self) -> bool:
        return self.ok


def _stake_fn(policy: CPolicy, cfg: TestConfig):
    """mu -> scalar stake, or None when the policy is not a scalar-in-mu family."""
    if isinstance(policy, ConstantStake):
        return lambda mu: policy.c
    if isinstance(policy, PowerFamily):
        return lambda mu: policy.c_at(mu, cfg)
    return None


def validate_c_policy(policy: CPolicy, cfg: TestConfig, mu_grid: Sequence[float] | None = None) -> PolicyReport:
    """Check the stake stays in [0, 1] and the log-derivative band
    0 <= -d/dmu log c(mu) <= 1/(tau1-mu) + 1/(mu-tau0) on a mu grid.

    Violations are reported, not raised; the first offending mu is returned.
    """
    if isinstance(policy, StakeSchedule):
        return PolicyReport(ok=True)  # constant in mu; entries validated on construction
    if isinstance(policy, MixtureSpec):
        if policy.support[0] < 0.0:
            return PolicyReport(False, (policy.support[0], "negative stakes are not increasing in mu for upper bounds"))
        return PolicyReport(ok=True)
    if cfg.tau0 is None or cfg.tau1 is None:
        if isinstance(policy, ConstantStake):
            return PolicyReport(ok=True)
        return PolicyReport(False, (math.nan, "mean-dependent families need both bounds"))
    lo = cfg.tau0 + (policy.m if isinstance(policy, PowerFamily) else 0.0)
    hi = cfg.tau1
    if mu_grid is None:
        mu_grid = np.linspace(lo, hi - _EDGE * (hi - cfg.tau0), 201)
    stake = _stake_fn(policy, cfg)
    span = max(mu_grid) - min(mu_grid)
    h = 1e-6 * span
    for mu in mu_grid:
        c = stake(mu)
        if not (0.0 <= c <= 1.0):
            return PolicyReport(False, (float(mu), f"stake {c} outside [0, 1]"))
        if c > 0.0 and lo < mu - h and mu + h < hi:
            dlog = (math.log(stake(mu + h)) - math.log(stake(mu - h))) / (2.0 * h)
            band = 1.0 / (cfg.tau1 - mu) + 1.0 / (mu - cfg.tau0)
            if not (-band - 1e-6 <= dlog <= 1e-6):
                return PolicyReport(False, (float(mu), f"-d/dmu log c = {-dlog} outside [0, {band}]"))
    return PolicyReport(ok=True)


def log_family_value(ts: np.ndarray, mu: float, cfg: TestConfig, policy: CPolicy, node_count: int = DEFAULT_NODE_COUNT) -> float:
    """log M_k^mu for the family induced by the policy, at the full history."""
    ts = np.ascontiguousarray(ts, dtype=float)
    if ts.size == 0:
        return 0.0
    if isinstance(policy, MixtureSpec):
        nodes, weights = grid_for(policy, node_count)
        denom_pos, denom_neg = branch_denominators(nodes, mu, cfg.tau0, cfg.tau1)
        vals = np.zeros_like(nodes)
        kernels.mixture_advance(ts, nodes, mu, denom_pos, denom_neg, vals)
        v = np.log(weights) + vals
        hi = float(v.max())
        if hi == -math.inf:
            return -math.inf
        return hi + math.log(float(np.exp(v - hi).sum()))
    if isinstance(policy, StakeSchedule):
        cs = np.asarray(policy.cs[: ts.size], dtype=float)
        if cs.size < ts.size:
            raise ValueError("schedule shorter than the history")
        f = 1.0 - cs * (ts - mu) / (cfg.tau1 - mu)
        if np.any(f <= 0.0):
            return -math.inf
        return float(np.log(f).sum())
    c = _stake_fn(policy, cfg)(mu)
    out = np.empty(ts.size)
    kernels.fold_constant(ts, mu, cfg.tau1 - mu, c, out)
    return float(out[-1])


def family_log_trajectory(ts: np.ndarray, mu: float, cfg: TestConfig, policy: CPolicy, node_count: int = DEFAULT_NODE_COUNT) -> np.ndarray:
    """Per-step log M_j^mu for j = 1..k (used for running-maximum checks)."""
    ts = np.ascontiguousarray(ts, dtype=float)
    if isinstance(policy, MixtureSpec):
        nodes, weights = grid_for(policy, node_count)
        denom_pos, denom_neg = branch_denominators(nodes, mu, cfg.tau0, cfg.tau1)
        r = np.where(nodes[None, :] >= 0.0, (ts[:, None] - mu) / denom_pos, (ts[:, None] - mu) / denom_neg)
        f = 1.0 - nodes[None, :] * r
        with np.errstate(divide="ignore"):
            lf = np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), -np.inf)
        cum = np.cumsum(lf, axis=0) + np.log(weights)[None, :]
        out = np.full(ts.size, -np.inf)
        mx = cum.max(axis=1)
        ok = np.isfinite(mx)
        if np.any(ok):
            out[ok] = mx[ok] + np.log(np.exp(cum[ok] - mx[ok, None]).sum(axis=1))
        return out
    if isinstance(policy, StakeSchedule):
        cs = np.asarray(policy.cs[: ts.size], dtype=float)
        f = 1.0 - cs * (ts - mu) / (cfg.tau1 - mu)
        with np.errstate(divide="ignore"):
            lf = np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), -np.inf)
        return np.cumsum(lf)
    c = _stake_fn(policy, cfg)(mu)
    out = np.empty(ts.size)
    kernels.fold_constant(ts, mu, cfg.tau1 - mu, c, out)
    return out


@dataclass(frozen=True)
class BoundResult:
    k: int
    mu_r: float
    running_min: float


def _bisect_smallest_crossing(g, lo: float, hi: float, tol: float = _MU_TOL) -> float:
    """Smallest x in (lo, hi] with g(x) >= 0, given one upward crossing and
    g(hi) >= 0 > g(lo)."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _bisect_largest_crossing(g, lo: float, hi: float, tol: float = _MU_TOL) -> float:
    """Largest x in [lo, hi) with g(x) >= 0, given one downward crossing and
    g(lo) >= 0 > g(hi)."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def _at_k_bound(ts: np.ndarray, cfg: TestConfig, policy: CPolicy, node_count: int) -> float:
    thr = cfg.log_threshold
    search_lo = cfg.tau0 if cfg.tau0 is not None else cfg.mu - 100.0 * (cfg.tau1 - cfg.mu)
    if isinstance(policy, PowerFamily):
        search_lo = cfg.tau0 + policy.m
    search_hi = cfg.tau1 - _EDGE

    def g(mu: float) -> float:
        return log_family_value(ts, mu, cfg, policy, node_count) - thr

    if g(search_hi) < 0.0:
        return math.inf
    if g(search_lo) >= 0.0:
        return search_lo
    return _bisect_smallest_crossing(g, search_lo, search_hi)


def upper_bound(
    history: Sequence[float],
    cfg: TestConfig,
    policy: CPolicy,
    mode: BoundMode = BoundMode.AT_K,
    node_count: int = DEFAULT_NODE_COUNT,
) -> BoundResult:
    """(1-alpha) upper confidence bound at the end of the history.

    AT_K evaluates only the final step; RUNNING also minimizes over all
    prefixes (the anytime-valid bound).
    """
    ts = np.asarray(as_observations(history, cfg), dtype=float)
    if mode is BoundMode.AT_K:
        mu_r = _at_k_bound(ts, cfg, policy, node_count)
        return BoundResult(ts.size, mu_r, mu_r)
    traj = bound_trajectory(history, cfg, policy, node_count)
    if not traj:
        return BoundResult(0, math.inf, math.inf)
    return traj[-1]


def bound_trajectory(
    history: Sequence[float],
    cfg: TestConfig,
    policy: CPolicy,
    node_count: int = DEFAULT_NODE_COUNT,
) -> list[BoundResult]:
    """Per-step at-k bounds plus their running minimum."""
    ts = np.asarray(as_observations(history, cfg), dtype=float)
    out: list[BoundResult] = []
    running = math.inf
    for k in range(1, ts.size + 1):
        mu_r = _at_k_bound(ts[:k], cfg, policy, node_count)
        running = min(running, mu_r)
        out.append(BoundResult(k, mu_r, running))
    return out


@dataclass(frozen=True)
class IntervalResult:
    k: int
    at_k: tuple[float, float]
    running: tuple[float, float] | None
    empty: bool
    last_nonempty: tuple[float, float]


def _at_k_interval(ts: np.ndarray, cfg: TestConfig, spec: MixtureSpec, node_count: int) -> tuple[float, float]:
    thr = cfg.log_threshold
    lo_edge, hi_edge = cfg.tau0, cfg.tau1
    if ts.size == 0:
        return (lo_edge, hi_edge)
    tbar = float(ts.mean())

    def g(mu: float) -> float:
        return log_family_value(ts, mu, cfg, spec, node_count) - thr

    lo_probe = lo_edge + _EDGE * (hi_edge - lo_edge)
    hi_probe = hi_edge - _EDGE * (hi_edge - lo_edge)
    # g is convex in mu with g(tbar) <= -log(1/alpha) < 0, so each side has
    # at most one crossing
    if tbar <= lo_probe or g(lo_probe) < 0.0:
        lo = lo_edge
    else:
        lo = _bisect_largest_crossing(g, lo_probe, tbar)
    if tbar >= hi_probe or g(hi_probe) < 0.0:
        hi = hi_edge
    else:
        hi = _bisect_smallest_crossing(g, tbar, hi_probe)
    return (lo, hi)


def interval(
    history: Sequence[float],
    cfg: TestConfig,
    spec: MixtureSpec,
    mode: BoundMode = BoundMode.AT_K,
    node_count: int = DEFAULT_NODE_COUNT,
) -> IntervalResult:
    """Two-sided (1-alpha) confidence interval from a mixture over [-1, 1].

    The at-k interval always contains the sample mean; only the running
    intersection can turn empty (probability at most alpha), in which case
    the last nonempty interval is retained alongside the EMPTY marker.
    """
    if cfg.tau0 is None or cfg.tau1 is None:
        raise ValueError("intervals need both support bounds")
    if mode is BoundMode.AT_K:
        ts = np.asarray(as_observations(history, cfg), dtype=float)
        at_k = _at_k_interval(ts, cfg, spec, node_count)
        return IntervalResult(ts.size, at_k, at_k, False, at_k)
    traj = interval_trajectory(history, cfg, spec, node_count)
    if not traj:
        whole = (cfg.tau0, cfg.tau1)
        return IntervalResult(0, whole, whole, False, whole)
    return traj[-1]


def interval_trajectory(
    history: Sequence[float],
    cfg: TestConfig,
    spec: MixtureSpec,
    node_count: int = DEFAULT_NODE_COUNT,
) -> list[IntervalResult]:
    if cfg.tau0 is None or cfg.tau1 is None:
        raise ValueError("intervals need both support bounds")
    ts = np.asarray(as_observations(history, cfg), dtype=float)
    out: list[IntervalResult] = []
    run_lo, run_hi = cfg.tau0, cfg.tau1
    last_nonempty = (run_lo, run_hi)
    empty = False
    for k in range(1, ts.size + 1):
        lo, hi = _at_k_interval(ts[:k], cfg, spec, node_count)
        if not empty:
            run_lo = max(run_lo, lo)
            run_hi = min(run_hi, hi)
            if run_lo > run_hi:
                empty = True
            else:
                last_nonempty = (run_lo, run_hi)
        out.append(
            IntervalResult(
                k,
                (lo, hi),
                None if empty else (run_lo, run_hi),
                empty,
                last_nonempty,
            )
        )
    return out
