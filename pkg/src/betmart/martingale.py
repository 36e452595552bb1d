"""Per-observation test-martingale updates and the anytime decision rule.

The martingale starts at M_0 = 1 and multiplies, per observation, the
factor 1 - c (t - mu) / (tau1 - mu) for the upper-null side (mirrored
through tau0 for the lower side). All state lives in natural-log space;
a zero factor becomes a sticky -inf ("absorbed"). The level-alpha rule
rejects as soon as the running maximum reaches 1/alpha, ties inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from betmart.config import Side, TestConfig, validate_observation, validate_stake
from betmart.errors import StreamDesync
from betmart.wire import decode_number, encode_number


class Branch(str, Enum):
    """Which one-sided factor to apply (two-sided tests run both)."""

    UPPER = "upper"
    LOWER = "lower"


class Decision(str, Enum):
    REJECT = "Reject"
    CONTINUE = "Continue"


@dataclass(frozen=True)
class MartingaleState:
    """Immutable snapshot after k observations.

    log_m is ln(M_k) (-inf once absorbed), log_m_max the running maximum of
    log_m over steps 0..k; it starts at 0 because M_0 = 1 and never decreases.
    """

    k: int = 0
    log_m: float = 0.0
    log_m_max: float = 0.0
    absorbed: bool = False

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "log_m": encode_number(self.log_m),
            "log_m_max": encode_number(self.log_m_max),
            "absorbed": self.absorbed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MartingaleState":
        return cls(
            k=int(obj["k"]),
            log_m=decode_number(obj["log_m"]),
            log_m_max=decode_number(obj["log_m_max"]),
            absorbed=bool(obj["absorbed"]),
        )


def _branch_for(cfg: TestConfig) -> Branch:
    if cfg.side is Side.UPPER_NULL:
        return Branch.UPPER
    if cfg.side is Side.LOWER_NULL:
        return Branch.LOWER
    raise ValueError("two-sided config: pass an explicit branch")


def factor(branch: Branch, t: float, cfg: TestConfig, c: float) -> float:
    """Single-observation multiplication factor for one branch.

    Upper: 1 - c (t - mu)/(tau1 - mu); lower: 1 - c (mu - t)/(mu - tau0).
    Always >= 0 for in-bounds t and c in [0, 1].
    """
    c = validate_stake(c)
    t = validate_observation(t, cfg)
    if branch is Branch.UPPER:
        if cfg.tau1 is None:
            raise ValueError("upper factor needs tau1")
        return 1.0 - c * ((t - cfg.mu) / (cfg.tau1 - cfg.mu))
    if cfg.tau0 is None:
        raise ValueError("lower factor needs tau0")
    return 1.0 - c * ((cfg.mu - t) / (cfg.mu - cfg.tau0))


def step(
    state: MartingaleState,
    t: float,
    c: float,
    cfg: TestConfig,
    branch: Branch | None = None,
) -> MartingaleState:
    """Advance one observation. The stake c must be predictable at this step
    (fixed before t was observed); that contract is the caller's."""
    if state.absorbed:
        return replace(state, k=state.k + 1)
    f = factor(branch or _branch_for(cfg), t, cfg, c)
    if f == 0.0:
        log_m = -math.inf
    else:
        log_m = state.log_m + math.log(f)
    return MartingaleState(
        k=state.k + 1,
        log_m=log_m,
        log_m_max=max(state.log_m_max, log_m),
        absorbed=f == 0.0,
    )


def batch_step(
    state: MartingaleState,
    ts: Sequence[float],
    c: float,
    cfg: TestConfig,
    branch: Branch | None = None,
) -> MartingaleState:
    """Fold a whole batch under one pre-committed stake.

    The running maximum is refreshed only after the batch, so crossings
    inside it are deliberately not credited (batch procedures are lossy).
    """
    br = branch or _branch_for(cfg)
    log_m = state.log_m
    k = state.k
    absorbed = state.absorbed
    for i, t in enumerate(ts):
        k += 1
        if absorbed:
            continue
        f = factor(br, t, cfg, c)
        if f == 0.0:
            log_m = -math.inf
            absorbed = True
        else:
            log_m += math.log(f)
    return MartingaleState(
        k=k,
        log_m=log_m,
        log_m_max=max(state.log_m_max, log_m),
        absorbed=absorbed,
    )


def two_sided_value(plus: MartingaleState, minus: MartingaleState, rho_plus: float) -> float:
    """Log of rho+ M+ + rho- M-, combined stably in log space."""
    if plus.k != minus.k:
        raise StreamDesync(f"plus at k={plus.k}, minus at k={minus.k}")
    if not (0.0 <= rho_plus <= 1.0):
        raise ValueError(f"rho_plus must be in [0, 1], got {rho_plus}")
    terms = []
    if rho_plus > 0.0 and plus.log_m > -math.inf:
        terms.append(math.log(rho_plus) + plus.log_m)
    if rho_plus < 1.0 and minus.log_m > -math.inf:
        terms.append(math.log(1.0 - rho_plus) + minus.log_m)
    if not terms:
        return -math.inf
    hi = max(terms)
    return hi + math.log(sum(math.exp(v - hi) for v in terms))


def decision(state_or_log_max: "MartingaleState | float", alpha: float) -> Decision:
    """Reject iff the running maximum has reached 1/alpha (equality rejects)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    log_max = (
        state_or_log_max.log_m_max
        if isinstance(state_or_log_max, MartingaleState)
        else float(state_or_log_max)
    )
    return Decision.REJECT if log_max >= -math.log(alpha) else Decision.CONTINUE
