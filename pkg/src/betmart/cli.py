"""Command-line surface.

Subcommands: test (stream a file through a martingale), bound, interval,
analyze, simulate, serve. Observation files are JSONL objects {"t": x} or
header-free single-column CSV. Numbers print with 9 significant digits so
goldens stay stable; exit codes: 0 ok, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from betmart import analysis, codecs, confidence, simulation, wire
from betmart.config import ConstantStake, Side, StakeSchedule, TestConfig
from betmart.errors import BetmartError
from betmart.martingale import Branch, Decision, MartingaleState, decision, step
from betmart.mixtures import MixtureSpec, mixture_init, mixture_update, mixture_value

CONFIG_ENV = "BETMART_CONFIG"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".9g")


def read_observations(path: str) -> list[float]:
    """JSONL {"t": number} per line, or bare one-number-per-line CSV."""
    out: list[float] = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            try:
                obj = json.loads(line)
                out.append(float(obj["t"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise BetmartError(f"{path}:{lineno}: bad JSONL observation ({exc})") from None
        else:
            try:
                out.append(float(line.split(",")[0]))
            except ValueError:
                raise BetmartError(f"{path}:{lineno}: not a number: {line!r}") from None
    return out


def _env_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path or not Path(path).exists():
        return {}
    return json.loads(Path(path).read_text())


def _add_config_args(p: argparse.ArgumentParser) -> None:
    defaults = _env_defaults()
    p.add_argument("--mu", type=float, default=defaults.get("mu"), help="null mean")
    p.add_argument("--tau0", type=float, default=defaults.get("tau0"), help="lower support bound")
    p.add_argument("--tau1", type=float, default=defaults.get("tau1"), help="upper support bound")
    p.add_argument("--alpha", type=float, default=defaults.get("alpha", 0.05))
    p.add_argument("--side", choices=["upper", "lower", "two-sided"], default=defaults.get("side", "upper"))
    p.add_argument("--rho-plus", type=float, default=defaults.get("rho_plus"))


def _add_policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, help="constant stake")
    p.add_argument("--mixture", nargs=2, type=float, metavar=("A", "B"), help="uniform stake density on [A, B]")
    p.add_argument("--power", nargs=4, type=float, metavar=("D", "R", "S", "M"), help="stake family d(tau1-mu)^r/(mu-tau0)^s for mu >= tau0+m")


def _config_from(args) -> TestConfig:
    if args.mu is None:
        raise BetmartError("--mu is required (or set it in the config file)")
    return TestConfig(
        mu=args.mu,
        alpha=args.alpha,
        tau0=args.tau0,
        tau1=args.tau1,
        side=Side(args.side),
        rho_plus=args.rho_plus,
    )


def _policy_from(args, default_c: float | None = None):
    chosen = [x for x in (args.c, args.mixture, args.power) if x is not None]
    if len(chosen) > 1:
        raise BetmartError("choose one of --c / --mixture / --power")
    if args.c is not None:
        return ConstantStake(args.c)
    if args.mixture is not None:
        return MixtureSpec(support=(args.mixture[0], args.mixture[1]))
    if args.power is not None:
        d, r, s, m = args.power
        return confidence.PowerFamily(d, r, s, m)
    if default_c is not None:
        return ConstantStake(default_c)
    raise BetmartError("a policy is required: --c, --mixture or --power")


def _out_stream(args):
    return open(args.out, "w") if getattr(args, "out", None) else sys.stdout


def cmd_test(args) -> int:
    cfg = _config_from(args)
    policy = _policy_from(args)
    ts = read_observations(args.infile)
    out = _out_stream(args)
    thr = cfg.log_threshold
    reject_at = 0
    if isinstance(policy, MixtureSpec):
        mstate = mixture_init(policy)
        log_max = 0.0
        for k, t in enumerate(ts, start=1):
            mstate = mixture_update(mstate, t, cfg)
            log_m = mixture_value(mstate)
            log_max = max(log_max, log_m)
            if not reject_at and log_max >= thr:
                reject_at = k
            _emit_step(out, args.format, k, t, log_m, log_max, thr)
    else:
        state = MartingaleState()
        branch = Branch.UPPER if cfg.side is not Side.LOWER_NULL else Branch.LOWER
        for k, t in enumerate(ts, start=1):
            c = policy.c if isinstance(policy, ConstantStake) else policy.stake_at(k - 1)
            state = step(state, t, c, cfg, branch)
            if not reject_at and state.log_m_max >= thr:
                reject_at = k
            _emit_step(out, args.format, k, t, state.log_m, state.log_m_max, thr)
    if reject_at:
        print(f"REJECT at k={reject_at} (alpha={_fmt(cfg.alpha)})", file=out)
    else:
        final = state.log_m if not isinstance(policy, MixtureSpec) else mixture_value(mstate)
        k = len(ts)
        print(f"CONTINUE, k={k}, M={_fmt(math.exp(final) if final < 700 else math.inf)}", file=out)
    if out is not sys.stdout:
        out.close()
    return 0


def _emit_step(out, fmt: str, k: int, t: float, log_m: float, log_max: float, thr: float) -> None:
    if fmt == "json":
        rec = {
            "k": k,
            "t": t,
            "log_m": wire.encode_number(log_m),
            "log_m_max": wire.encode_number(log_max),
            "decision": Decision.REJECT.value if log_max >= thr else Decision.CONTINUE.value,
        }
        print(wire.dumps(rec), file=out)
    else:
        print(f"{k},{_fmt(t)},{_fmt(log_m)},{_fmt(log_max)}", file=out)


def cmd_bound(args) -> int:
    cfg = _config_from(args)
    policy = _policy_from(args)
    ts = read_observations(args.infile)
    out = _out_stream(args)
    for res in confidence.bound_trajectory(ts, cfg, policy):
        rec = {"k": res.k, "mu_r": wire.encode_number(res.mu_r), "running_min": wire.encode_number(res.running_min)}
        print(wire.dumps(rec), file=out)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_interval(args) -> int:
    cfg = _config_from(args)
    spec = MixtureSpec(support=(args.mixture[0], args.mixture[1])) if args.mixture else MixtureSpec(support=(-1.0, 1.0))
    ts = read_observations(args.infile)
    out = _out_stream(args)
    for res in confidence.interval_trajectory(ts, cfg, spec):
        rec = {
            "k": res.k,
            "lo": wire.encode_number(res.at_k[0]),
            "hi": wire.encode_number(res.at_k[1]),
            "running_lo": None if res.running is None else wire.encode_number(res.running[0]),
            "running_hi": None if res.running is None else wire.encode_number(res.running[1]),
            "empty": res.empty,
        }
        print(wire.dumps(rec), file=out)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_analyze(args) -> int:
    cfg = _config_from(args)
    dist = codecs.parse_dist(args.dist)
    out = _out_stream(args)
    cmax = analysis.c_max(dist, cfg)
    copt, lam_opt = analysis.c_opt(dist, cfg)
    lines = {
        "c_max": cmax,
        "c_opt": copt,
        "lambda_opt": lam_opt,
    }
    if args.c is not None:
        lines[f"lambda({_fmt(args.c)})"] = analysis.lambda_fn(dist, cfg, args.c)
        mean_n, sd_n = analysis.wald_n(dist, cfg, args.c)
        lines["wald_mean_n"] = mean_n
        lines["wald_sd_n"] = sd_n
        if cfg.tau0 is not None:
            sb = analysis.size_bounds(cfg, args.c)
            lines["size_lower"] = sb.lower
            lines["size_upper"] = sb.upper
            lines["size_coarse"] = sb.coarse
            lines["inverse_signal_threshold"] = analysis.inverse_signal_threshold(cfg, args.c)
    if args.format == "json":
        print(wire.dumps({k: wire.encode_number(v) for k, v in lines.items()}), file=out)
    else:
        for key, val in lines.items():
            print(f"{key} = {_fmt(val)}", file=out)
        curve = analysis.growth_curve(dist, cfg, n=19)
        print("c,lambda", file=out)
        for c, lam in zip(curve.c_grid, curve.lambda_vals):
            print(f"{_fmt(c)},{_fmt(lam)}", file=out)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_simulate(args) -> int:
    payload = json.loads(Path(args.scenario).read_text())
    scenarios = payload if isinstance(payload, list) else [payload]
    rows = []
    for obj in scenarios:
        if args.seed is not None:
            obj = {**obj, "seed": args.seed}
        scenario = codecs.scenario_from_json(obj)
        summary = simulation.experiment(scenario)
        rows.append((scenario, summary))
    out = _out_stream(args)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["scenario", "policy", "runs", "mean", "sd", "se", "mean_tbar", "sd_tbar", "reject_rate", "not_stopped"]
    )
    for scenario, s in rows:
        writer.writerow(
            [
                scenario.label or codecs.dist_to_json(scenario.dist)["kind"],
                json.dumps(codecs.policy_to_json(scenario.policy), separators=(",", ":")),
                s.runs,
                _fmt(s.mean_n),
                _fmt(s.sd_n),
                _fmt(s.se_n),
                _fmt(s.mean_tbar),
                _fmt(s.sd_tbar),
                _fmt(s.reject_rate),
                s.not_stopped_count,
            ]
        )
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_serve(args) -> int:
    from betmart.service import serve

    serve(args.data_dir, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betmart", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("test", help="stream observations through a test martingale")
    _add_config_args(p)
    _add_policy_args(p)
    p.add_argument("--in", dest="infile", required=True, help="JSONL or single-column CSV")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bound", help="running upper confidence bound trajectory")
    _add_config_args(p)
    _add_policy_args(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("interval", help="two-sided confidence interval trajectory")
    _add_config_args(p)
    p.add_argument("--mixture", nargs=2, type=float, metavar=("A", "B"), help="two-sided stake support, default [-1, 1]")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("analyze", help="growth curve, optimal stakes, Wald and size numbers")
    _add_config_args(p)
    p.add_argument("--dist", required=True, help="alt:0.02 | scaled:0.2,0.1 | beta:2,98 | point:0.02 | finite:t,p;...")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run scenario files, emit CSV summaries")
    p.add_argument("--scenario", required=True, help="scenario JSON (object or list)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="start the session service")
    p.add_argument("--data-dir", default="./betmart-sessions")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8710)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BetmartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
