"""Seeded Monte Carlo experiments over stopping rules.

Each run draws its own RNG substream from the scenario seed (SeedSequence
spawning), so results are reproducible bit for bit and independent of any
execution order across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from betmart import kernels
from betmart.config import ConstantStake, StakeSchedule, TestConfig
from betmart.confidence import CPolicy, PowerFamily, _at_k_bound, log_family_value
from betmart.distributions import DistributionSpec, check_support, sample
from betmart.mixtures import DEFAULT_NODE_COUNT, MixtureSpec, branch_denominators, grid_for


@dataclass(frozen=True)
class RejectAtAlpha:
    pass


@dataclass(frozen=True)
class PrecisionStop:
    m: float
    min_n: int = 50


@dataclass(frozen=True)
class Both:
    m: float
    min_n: int = 50


StopRule = Union[RejectAtAlpha, PrecisionStop, Both]


@dataclass(frozen=True)
class Scenario:
    dist: DistributionSpec
    cfg: TestConfig
    policy: CPolicy
    stop_rule: StopRule = RejectAtAlpha()
    cap: int = 5000
    runs: int = 1
    seed: int = 0
    node_count: int = DEFAULT_NODE_COUNT
    label: str = ""

    def __post_init__(self) -> None:
        check_support(self.dist, self.cfg)
        min_n = getattr(self.stop_rule, "min_n", 1)
        if self.cap < min_n:
            raise ValueError(f"cap {self.cap} below the rule's minimum sample size {min_n}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")


@dataclass(frozen=True)
class RunRecord:
    """Stopping indices of one run; None where the rule never fired by the cap."""

    n_reject: int | None = None
    tbar_reject: float | None = None
    n_precision_star: int | None = None
    bound_star: float | None = None
    tbar_star: float | None = None
    n_precision: int | None = None
    bound_at: float | None = None
    tbar_at: float | None = None
    n_bound_reject: int | None = None
    capped: bool = False


@dataclass(frozen=True)
class RunSummary:
    runs: int
    mean_n: float
    sd_n: float
    se_n: float
    mean_tbar: float
    sd_tbar: float
    reject_rate: float
    not_stopped_count: int


def _reject_crossing(ts: np.ndarray, scenario: Scenario) -> int:
    """First 1-based step where the test martingale reaches 1/alpha; 0 if never."""
    cfg = scenario.cfg
    policy = scenario.policy
    thr = cfg.log_threshold
    denom = cfg.tau1 - cfg.mu
    if isinstance(policy, ConstantStake):
        return kernels.first_crossing_constant(ts, cfg.mu, denom, policy.c, thr)
    if isinstance(policy, PowerFamily):
        return kernels.first_crossing_constant(ts, cfg.mu, denom, policy.c_at(cfg.mu, cfg), thr)
    if isinstance(policy, MixtureSpec):
        nodes, weights = grid_for(policy, scenario.node_count)
        denom_pos, denom_neg = branch_denominators(nodes, cfg.mu, cfg.tau0, cfg.tau1)
        vals = np.zeros_like(nodes)
        return kernels.mixture_crossing(ts, nodes, np.log(weights), cfg.mu, denom_pos, denom_neg, thr, vals)
    if isinstance(policy, StakeSchedule):
        cs = np.asarray(policy.cs[: ts.size], dtype=float)
        if cs.size < ts.size:
            raise ValueError("schedule shorter than the cap")
        f = 1.0 - cs * (ts - cfg.mu) / denom
        with np.errstate(divide="ignore"):
            lf = np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), -np.inf)
        hits = np.flatnonzero(np.cumsum(lf) >= thr)
        return int(hits[0]) + 1 if hits.size else 0
    raise TypeError(f"unsupported policy {policy!r}")


def _precision_scan(ts: np.ndarray, scenario: Scenario) -> dict:
    """Walk the stream applying the precision and bound-rejection rules.

    Per step k >= min_n the at-k gap test "bound_k <= tbar_k + m" is one
    family evaluation at mu = tbar_k + m (no root-finding), because the
    family value is increasing in mu. The running minimum of bounds is
    maintained the same way and only re-solved when it provably moved.
    """
    cfg = scenario.cfg
    rule = scenario.stop_rule
    policy = scenario.policy
    thr = cfg.log_threshold
    hi_cap = cfg.tau1 - 1e-9
    out: dict = {}
    running_min = math.inf
    csum = np.cumsum(ts)

    def value_at(mu: float, k: int) -> float:
        return log_family_value(ts[:k], mu, cfg, policy, scenario.node_count)

    for k in range(rule.min_n, ts.size + 1):
        tbar = float(csum[k - 1]) / k
        # the family value is increasing in mu, so "bound_k <= x" is exactly
        # "value at x >= threshold"; roots are solved only when needed
        if value_at(min(running_min, hi_cap), k) >= thr:
            running_min = min(running_min, _at_k_bound(ts[:k], cfg, policy, scenario.node_count))
        if "n_precision_star" not in out and running_min - tbar <= rule.m:
            out["n_precision_star"] = k
            out["bound_star"] = running_min
            out["tbar_star"] = tbar
        if "n_precision" not in out and value_at(min(tbar + rule.m, hi_cap), k) >= thr:
            out["n_precision"] = k
            out["bound_at"] = _at_k_bound(ts[:k], cfg, policy, scenario.node_count)
            out["tbar_at"] = tbar
        if "n_bound_reject" not in out and value_at(min(rule.m, hi_cap), k) >= thr:
            out["n_bound_reject"] = k
        if "n_precision" in out and "n_precision_star" in out and "n_bound_reject" in out:
            break
    return out


def run_trial(scenario: Scenario, rng: np.random.Generator | int | None = None) -> RunRecord:
    """Advance one run to its stopping rule (or the cap) and record indices."""
    if rng is None:
        rng = scenario.seed
    ts = sample(scenario.dist, scenario.cap, rng)
    rule = scenario.stop_rule
    fields: dict = {}
    if isinstance(rule, (RejectAtAlpha, Both)):
        n = _reject_crossing(ts, scenario)
        if n:
            fields["n_reject"] = n
            fields["tbar_reject"] = float(ts[:n].mean())
    if isinstance(rule, (PrecisionStop, Both)):
        fields.update(_precision_scan(ts, scenario))
    primary = fields.get("n_reject") if isinstance(rule, (RejectAtAlpha, Both)) else fields.get("n_precision_star")
    fields["capped"] = primary is None
    return RunRecord(**fields)


def experiment_records(scenario: Scenario) -> list[RunRecord]:
    children = np.random.SeedSequence(scenario.seed).spawn(scenario.runs)
    return [run_trial(scenario, np.random.default_rng(child)) for child in children]


def _primary_indices(scenario: Scenario, records: list[RunRecord]) -> list[tuple[int | None, float | None]]:
    if isinstance(scenario.stop_rule, (RejectAtAlpha, Both)):
        return [(r.n_reject, r.tbar_reject) for r in records]
    return [(r.n_precision_star, r.tbar_star) for r in records]


def summarize(scenario: Scenario, records: list[RunRecord]) -> RunSummary:
    pairs = _primary_indices(scenario, records)
    ns = np.array([n for n, _ in pairs if n is not None], dtype=float)
    tbars = np.array([t for n, t in pairs if n is not None], dtype=float)
    not_stopped = sum(1 for n, _ in pairs if n is None)
    if isinstance(scenario.stop_rule, PrecisionStop):
        rejected = sum(1 for r in records if r.n_bound_reject is not None)
    else:
        rejected = sum(1 for r in records if r.n_reject is not None)
    count = ns.size
    mean_n = float(ns.mean()) if count else math.nan
    sd_n = float(ns.std(ddof=1)) if count > 1 else 0.0
    return RunSummary(
        runs=len(records),
        mean_n=mean_n,
        sd_n=sd_n,
        se_n=sd_n / math.sqrt(count) if count else math.nan,
        mean_tbar=float(tbars.mean()) if count else math.nan,
        sd_tbar=float(tbars.std(ddof=1)) if count > 1 else 0.0,
        reject_rate=rejected / len(records),
        not_stopped_count=not_stopped,
    )


def experiment(scenario: Scenario) -> RunSummary:
    """Run the whole scenario and aggregate. Deterministic in (scenario, seed)."""
    return summarize(scenario, experiment_records(scenario))
