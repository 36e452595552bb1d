"""Live audit sessions: ordering, predictability, append-only persistence.

A session is an event log: one config line, then policy and observation
events. The stake policy in force for observation k must have been
recorded at some step <= k-1 (predictability); policy changes compose
multiplicatively, so accumulated evidence carries across a switch while
the new family restarts at 1.

Each observation event stores the full computed snapshot. The log is the
audit evidence: reloading a session replays the raw events and verifies
the stored snapshots bit for bit.
"""

from __future__ import annotations

import math
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from betmart import wire
from betmart.codecs import config_from_json, config_to_json, policy_from_json, policy_to_json
from betmart.config import ConstantStake, Side, StakeSchedule, TestConfig, validate_observation
from betmart.confidence import CPolicy, PowerFamily, _at_k_bound, validate_c_policy
from betmart.errors import ConfigError, ConflictError, SessionNotFound
from betmart.martingale import Branch, Decision, MartingaleState, decision, step, two_sided_value
from betmart.mixtures import (
    MixtureSpec,
    grid_for,
    mixture_init,
    mixture_update,
    mixture_value,
)

_RHO_TOL = 1e-9


def _validate_session_policy(cfg: TestConfig, policy: CPolicy) -> None:
    if cfg.side is Side.TWO_SIDED:
        if isinstance(policy, MixtureSpec):
            if not policy.two_sided:
                raise ConfigError("policy", "two-sided sessions need a mixture spanning negative stakes")
            if abs(policy.positive_mass() - cfg.rho_plus) > _RHO_TOL:
                raise ConfigError(
                    "rho_plus",
                    f"config rho_plus={cfg.rho_plus} must equal the mixture's positive mass "
                    f"{policy.positive_mass()}",
                )
        elif not isinstance(policy, ConstantStake):
            raise ConfigError("policy", "two-sided sessions take a spanning mixture or a constant stake")
        return
    if isinstance(policy, MixtureSpec):
        if policy.support[0] < 0.0:
            raise ConfigError("policy", "one-sided sessions need stakes in [0, 1]")
        return
    if isinstance(policy, PowerFamily):
        report = validate_c_policy(policy, cfg)
        if not report.ok:
            mu, why = report.first_violation
            raise ConfigError("policy", f"power family invalid at mu={mu}: {why}")


class _SegmentEval:
    """Test-martingale value of one policy segment at the configured null."""

    def __init__(self, cfg: TestConfig, policy: CPolicy, start_k: int) -> None:
        self.cfg = cfg
        self.policy = policy
        self.start_k = start_k
        self.obs: list[float] = []
        side = cfg.side
        if isinstance(policy, MixtureSpec):
            spec = policy
            if side is Side.LOWER_NULL:
                # lower-branch betting: the sign convention maps stake c to node -c
                a, b = spec.support
                spec = MixtureSpec(support=(-b, -a), density=spec.density)
            self._mix = mixture_init(spec)
            self._plus = self._minus = None
        else:
            self._mix = None
            self._plus = MartingaleState()
            self._minus = MartingaleState()

    def _stake(self, global_k: int) -> float:
        if isinstance(self.policy, ConstantStake):
            return self.policy.c
        if isinstance(self.policy, StakeSchedule):
            return self.policy.stake_at(global_k - 1)
        if isinstance(self.policy, PowerFamily):
            return self.policy.c_at(self.cfg.mu, self.cfg)
        raise AssertionError

    def advance(self, t: float, global_k: int) -> None:
        self.obs.append(t)
        if self._mix is not None:
            self._mix = mixture_update(self._mix, t, self.cfg)
            return
        c = self._stake(global_k)
        side = self.cfg.side
        if side in (Side.UPPER_NULL, Side.TWO_SIDED):
            self._plus = step(self._plus, t, c, self.cfg, Branch.UPPER)
        if side in (Side.LOWER_NULL, Side.TWO_SIDED):
            self._minus = step(self._minus, t, c, self.cfg, Branch.LOWER)

    def log_value(self) -> float:
        if self._mix is not None:
            return mixture_value(self._mix)
        side = self.cfg.side
        if side is Side.UPPER_NULL:
            return self._plus.log_m
        if side is Side.LOWER_NULL:
            return self._minus.log_m
        return two_sided_value(self._plus, self._minus, self.cfg.rho_plus)


class SessionEngine:
    """Replayable computation: feed policy/observation events, read snapshots."""

    def __init__(self, cfg: TestConfig) -> None:
        self.cfg = cfg
        self.k = 0
        self.policy_version = 0
        self.segments: list[_SegmentEval] = []
        self.carry_log_m = 0.0
        self.log_m_max = 0.0
        self.bound_running_min = math.inf
        self.run_lo = cfg.tau0 if cfg.tau0 is not None else -math.inf
        self.run_hi = cfg.tau1 if cfg.tau1 is not None else math.inf
        self.interval_empty = False
        self.last_nonempty = (self.run_lo, self.run_hi)

    def set_policy(self, policy: CPolicy) -> int:
        _validate_session_policy(self.cfg, policy)
        if self.segments:
            self.carry_log_m += self.segments[-1].log_value()
        self.segments.append(_SegmentEval(self.cfg, policy, self.k))
        self.policy_version += 1
        return self.policy_version

    @property
    def log_m(self) -> float:
        if not self.segments:
            return 0.0
        return self.carry_log_m + self.segments[-1].log_value()

    def _bound_policies_usable(self) -> bool:
        return self.cfg.side is Side.UPPER_NULL and self.cfg.tau1 is not None

    def _composite_log_value(self, mu: float) -> float:
        from betmart.confidence import log_family_value

        total = 0.0
        for seg in self.segments:
            if not seg.obs:
                continue
            total += log_family_value(np.asarray(seg.obs), mu, self.cfg, seg.policy)
            if total == -math.inf:
                return total
        return total

    def _at_k_composite_bound(self) -> float:
        cfg = self.cfg
        thr = cfg.log_threshold
        lo = cfg.tau0 if cfg.tau0 is not None else cfg.mu - 100.0 * (cfg.tau1 - cfg.mu)
        for seg in self.segments:
            if isinstance(seg.policy, PowerFamily):
                lo = max(lo, cfg.tau0 + seg.policy.m)
        hi = cfg.tau1 - 1e-9

        def g(mu: float) -> float:
            return self._composite_log_value(mu) - thr

        if g(hi) < 0.0:
            return math.inf
        if g(lo) >= 0.0:
            return lo
        while hi - lo > 1e-8:
            mid = 0.5 * (lo + hi)
            if g(mid) >= 0.0:
                hi = mid
            else:
                lo = mid
        return hi

    def _two_sided_interval(self) -> tuple[float, float]:
        from betmart.confidence import _at_k_interval

        seg = self.segments[-1]
        ts = np.asarray(seg.obs, dtype=float)
        return _at_k_interval(ts, self.cfg, seg.policy, 64)

    def observe(self, t: float) -> dict:
        if not self.segments:
            raise ConfigError("policy", "no policy in force")
        t = validate_observation(t, self.cfg)
        self.k += 1
        self.segments[-1].advance(t, self.k)
        log_m = self.log_m
        self.log_m_max = max(self.log_m_max, log_m)
        snapshot: dict = {
            "k": self.k,
            "log_m": wire.encode_number(log_m),
            "log_m_max": wire.encode_number(self.log_m_max),
            "e_value": wire.encode_number(_safe_exp(log_m)),
            "e_value_max": wire.encode_number(_safe_exp(self.log_m_max)),
            "decision": decision(self.log_m_max, self.cfg.alpha).value,
            "policy_version": self.policy_version,
        }
        if self._bound_policies_usable():
            mu_r = self._at_k_composite_bound()
            self.bound_running_min = min(self.bound_running_min, mu_r)
            snapshot["bound"] = {
                "mu_r": wire.encode_number(mu_r),
                "running_min": wire.encode_number(self.bound_running_min),
            }
        else:
            snapshot["bound"] = None
        if self.cfg.side is Side.TWO_SIDED and isinstance(self.segments[-1].policy, MixtureSpec):
            lo, hi = self._two_sided_interval()
            if not self.interval_empty:
                self.run_lo = max(self.run_lo, lo)
                self.run_hi = min(self.run_hi, hi)
                if self.run_lo > self.run_hi:
                    self.interval_empty = True
                else:
                    self.last_nonempty = (self.run_lo, self.run_hi)
            snapshot["interval"] = {
                "lo": wire.encode_number(lo),
                "hi": wire.encode_number(hi),
                "running_lo": None if self.interval_empty else wire.encode_number(self.run_lo),
                "running_hi": None if self.interval_empty else wire.encode_number(self.run_hi),
                "empty": self.interval_empty,
                "last_nonempty": [
                    wire.encode_number(self.last_nonempty[0]),
                    wire.encode_number(self.last_nonempty[1]),
                ],
            }
        else:
            snapshot["interval"] = None
        return snapshot

    def state_snapshot(self) -> dict:
        return {
            "k": self.k,
            "log_m": wire.encode_number(self.log_m),
            "log_m_max": wire.encode_number(self.log_m_max),
            "e_value": wire.encode_number(_safe_exp(self.log_m)),
            "e_value_max": wire.encode_number(_safe_exp(self.log_m_max)),
            "decision": decision(self.log_m_max, self.cfg.alpha).value,
            "policy_version": self.policy_version,
            "bound": (
                {
                    "mu_r": wire.encode_number(self._at_k_composite_bound() if self.k else math.inf),
                    "running_min": wire.encode_number(self.bound_running_min),
                }
                if self._bound_policies_usable()
                else None
            ),
            "interval": None,
        }


def _safe_exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    if x > 700.0:
        return math.inf
    return math.exp(x)


@dataclass
class _Session:
    engine: SessionEngine
    events: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    created: str = ""
    updated: str = ""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Directory-backed store: one append-only JSONL file per session."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    # -- persistence ------------------------------------------------------

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _write_index(self) -> None:
        index = {
            "sessions": {
                sid: {"created": s.created, "updated": s.updated}
                for sid, s in sorted(self._sessions.items())
            }
        }
        self._index_path().write_text(wire.dumps(index) + "\n")

    def _append_line(self, session_id: str, event: dict) -> None:
        with open(self._path(session_id), "a") as fh:
            fh.write(wire.dumps(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- loading ----------------------------------------------------------

    def load_existing(self) -> list[str]:
        """Load every session log under the root, verifying snapshots."""
        loaded = []
        for path in sorted(self.root.glob("*.jsonl")):
            sid = path.stem
            if sid not in self._sessions:
                self._load(sid)
                loaded.append(sid)
        return loaded

    def _load(self, session_id: str) -> _Session:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        events = [wire.loads(line) for line in path.read_text().splitlines() if line.strip()]
        if not events or events[0].get("type") != "config":
            raise ValueError(f"session log {path} lacks a config header")
        engine = SessionEngine(config_from_json(events[0]["config"]))
        for event in events[1:]:
            if event["type"] == "policy":
                engine.set_policy(policy_from_json(event["policy"]))
            elif event["type"] == "obs":
                snapshot = engine.observe(event["t"])
                if snapshot != event["snapshot"]:
                    raise ValueError(
                        f"session {session_id}: replay mismatch at k={event['k']}"
                    )
            else:
                raise ValueError(f"unknown event type {event['type']!r}")
        session = _Session(engine=engine, events=events)
        session.created = events[0].get("created", "")
        session.updated = session.created
        with self._lock:
            return self._sessions.setdefault(session_id, session)

    def _get(self, session_id: str) -> _Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        try:
            return self._load(session_id)
        except FileNotFoundError:
            raise SessionNotFound(session_id) from None

    # -- api --------------------------------------------------------------

    def create_session(self, cfg: TestConfig, policy: CPolicy) -> tuple[str, dict]:
        engine = SessionEngine(cfg)
        engine.set_policy(policy)  # validates; raises ConfigError on bad policy
        session_id = uuid.uuid4().hex[:16]
        now = _now()
        config_event = {"type": "config", "created": now, "config": config_to_json(cfg)}
        policy_event = {"type": "policy", "version": 1, "at_k": 0, "policy": policy_to_json(policy)}
        session = _Session(engine=engine, events=[config_event, policy_event], created=now, updated=now)
        with self._lock:
            self._sessions[session_id] = session
            self._append_line(session_id, config_event)
            self._append_line(session_id, policy_event)
            self._write_index()
        return session_id, engine.state_snapshot()

    def append_observation(self, session_id: str, t: float, expected_k: int) -> dict:
        session = self._get(session_id)
        with session.lock:
            if expected_k != session.engine.k + 1:
                raise ConflictError(
                    f"expected_k={expected_k} but the next step is {session.engine.k + 1}"
                )
            snapshot = session.engine.observe(t)  # raises before anything is persisted
            event = {
                "type": "obs",
                "k": snapshot["k"],
                "t": float(t),
                "policy_version": session.engine.policy_version,
                "snapshot": snapshot,
            }
            session.events.append(event)
            session.updated = _now()
            self._append_line(session_id, event)
            with self._lock:
                self._write_index()
            return snapshot

    def change_policy(self, session_id: str, policy: CPolicy, expected_k: int) -> dict:
        session = self._get(session_id)
        with session.lock:
            if expected_k != session.engine.k:
                raise ConflictError(f"expected_k={expected_k} but the session is at k={session.engine.k}")
            version = session.engine.set_policy(policy)
            event = {
                "type": "policy",
                "version": version,
                "at_k": session.engine.k,
                "policy": policy_to_json(policy),
            }
            session.events.append(event)
            session.updated = _now()
            self._append_line(session_id, event)
            with self._lock:
                self._write_index()
            return {"version": version, "at_k": session.engine.k}

    def get_state(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            last_obs = next(
                (e for e in reversed(session.events) if e["type"] == "obs"), None
            )
            state = dict(last_obs["snapshot"]) if last_obs else session.engine.state_snapshot()
            state["id"] = session_id
            state["config"] = config_to_json(session.engine.cfg)
            state["policy_version"] = session.engine.policy_version
            return state

    def get_trajectory(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return {"id": session_id, "events": list(session.events)}

    def replay_check(self, session_id: str) -> bool:
        """Recompute every snapshot from the raw events; True iff bit-identical."""
        session = self._get(session_id)
        engine = SessionEngine(session.engine.cfg)
        for event in session.events:
            if event["type"] == "policy":
                engine.set_policy(policy_from_json(event["policy"]))
            elif event["type"] == "obs":
                if engine.observe(event["t"]) != event["snapshot"]:
                    return False
        return True
