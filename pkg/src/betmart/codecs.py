"""JSON codecs for configs, policies, distributions, and scenarios."""

from __future__ import annotations

from typing import Any

from betmart.config import ConstantStake, Side, StakeSchedule, TestConfig
from betmart.confidence import CPolicy, PowerFamily
from betmart.distributions import Alt, BetaDist, DistributionSpec, FiniteSupport, PointMass, ScaledAlt
from betmart.mixtures import MixtureSpec
from betmart.simulation import Both, PrecisionStop, RejectAtAlpha, Scenario, StopRule


def config_to_json(cfg: TestConfig) -> dict:
    out: dict[str, Any] = {"mu": cfg.mu, "alpha": cfg.alpha, "side": cfg.side.value}
    if cfg.tau0 is not None:
        out["tau0"] = cfg.tau0
    if cfg.tau1 is not None:
        out["tau1"] = cfg.tau1
    if cfg.rho_plus is not None:
        out["rho_plus"] = cfg.rho_plus
    return out


def config_from_json(obj: dict) -> TestConfig:
    return TestConfig(
        mu=float(obj["mu"]),
        alpha=float(obj["alpha"]),
        tau0=float(obj["tau0"]) if obj.get("tau0") is not None else None,
        tau1=float(obj["tau1"]) if obj.get("tau1") is not None else None,
        side=Side(obj.get("side", "upper")),
        rho_plus=float(obj["rho_plus"]) if obj.get("rho_plus") is not None else None,
    )


def policy_to_json(policy: CPolicy) -> dict:
    if isinstance(policy, ConstantStake):
        return {"kind": "constant", "c": policy.c}
    if isinstance(policy, StakeSchedule):
        return {"kind": "schedule", "cs": list(policy.cs)}
    if isinstance(policy, MixtureSpec):
        return {"kind": "mixture", **policy.to_json()}
    if isinstance(policy, PowerFamily):
        return {"kind": "power", "d": policy.d, "r": policy.r, "s": policy.s, "m": policy.m}
    raise TypeError(f"unknown policy {policy!r}")


def policy_from_json(obj: dict) -> CPolicy:
    kind = obj.get("kind")
    if kind == "constant":
        return ConstantStake(float(obj["c"]))
    if kind == "schedule":
        return StakeSchedule(tuple(obj["cs"]))
    if kind == "mixture":
        return MixtureSpec.from_json(obj)
    if kind == "power":
        return PowerFamily(float(obj["d"]), float(obj["r"]), float(obj["s"]), float(obj["m"]))
    raise ValueError(f"unknown policy kind {kind!r}")


def dist_to_json(dist: DistributionSpec) -> dict:
    if isinstance(dist, Alt):
        return {"kind": "alt", "nu": dist.nu}
    if isinstance(dist, ScaledAlt):
        return {"kind": "scaled_alt", "value": dist.value, "prob": dist.prob}
    if isinstance(dist, BetaDist):
        return {"kind": "beta", "a": dist.a, "b": dist.b}
    if isinstance(dist, PointMass):
        return {"kind": "point", "t": dist.t}
    if isinstance(dist, FiniteSupport):
        return {"kind": "finite", "points": list(dist.points), "probs": list(dist.probs)}
    raise TypeError(f"unknown distribution {dist!r}")


def dist_from_json(obj: dict) -> DistributionSpec:
    kind = obj.get("kind")
    if kind == "alt":
        return Alt(float(obj["nu"]))
    if kind == "scaled_alt":
        return ScaledAlt(float(obj["value"]), float(obj["prob"]))
    if kind == "beta":
        return BetaDist(float(obj["a"]), float(obj["b"]))
    if kind == "point":
        return PointMass(float(obj["t"]))
    if kind == "finite":
        return FiniteSupport(tuple(obj["points"]), tuple(obj["probs"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def parse_dist(text: str) -> DistributionSpec:
    """CLI shorthand: alt:0.02, scaled:0.2,0.1, beta:2,98, point:0.02,
    finite:t1,p1;t2,p2;..."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "alt":
            return Alt(float(rest))
        if kind in ("scaled", "scaled_alt"):
            value, prob = rest.split(",")
            return ScaledAlt(float(value), float(prob))
        if kind == "beta":
            a, b = rest.split(",")
            return BetaDist(float(a), float(b))
        if kind == "point":
            return PointMass(float(rest))
        if kind == "finite":
            points, probs = [], []
            for pair in rest.split(";"):
                t, p = pair.split(",")
                points.append(float(t))
                probs.append(float(p))
            return FiniteSupport(tuple(points), tuple(probs))
    except ValueError as exc:
        raise ValueError(f"cannot parse distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown distribution shorthand {text!r}")


def stop_rule_to_json(rule: StopRule) -> dict:
    if isinstance(rule, RejectAtAlpha):
        return {"kind": "reject"}
    if isinstance(rule, PrecisionStop):
        return {"kind": "precision", "m": rule.m, "min_n": rule.min_n}
    if isinstance(rule, Both):
        return {"kind": "both", "m": rule.m, "min_n": rule.min_n}
    raise TypeError(f"unknown stop rule {rule!r}")


def stop_rule_from_json(obj: dict) -> StopRule:
    kind = obj.get("kind", "reject")
    if kind == "reject":
        return RejectAtAlpha()
    if kind == "precision":
        return PrecisionStop(float(obj["m"]), int(obj.get("min_n", 50)))
    if kind == "both":
        return Both(float(obj["m"]), int(obj.get("min_n", 50)))
    raise ValueError(f"unknown stop rule kind {kind!r}")


def scenario_to_json(s: Scenario) -> dict:
    return {
        "label": s.label,
        "dist": dist_to_json(s.dist),
        "config": config_to_json(s.cfg),
        "policy": policy_to_json(s.policy),
        "stop_rule": stop_rule_to_json(s.stop_rule),
        "cap": s.cap,
        "runs": s.runs,
        "seed": s.seed,
        "node_count": s.node_count,
    }


def scenario_from_json(obj: dict) -> Scenario:
    return Scenario(
        dist=dist_from_json(obj["dist"]),
        cfg=config_from_json(obj["config"]),
        policy=policy_from_json(obj["policy"]),
        stop_rule=stop_rule_from_json(obj.get("stop_rule", {"kind": "reject"})),
        cap=int(obj.get("cap", 5000)),
        runs=int(obj.get("runs", 1)),
        seed=int(obj.get("seed", 0)),
        node_count=int(obj.get("node_count", 64)),
        label=str(obj.get("label", "")),
    )
