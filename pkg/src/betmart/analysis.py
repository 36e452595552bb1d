"""Growth analysis of constant-stake martingales and exact stopping times.

Everything here is about the upper-null side: the per-step log growth
lambda(c) = E log(1 - c (T - mu)/(tau1 - mu)), its maximizer and positive
range, Kullback-Leibler and size bounds, Wald run-length approximations,
and an exact first-crossing-time recursion for finite-support streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from betmart import kernels
from betmart.config import ConstantStake, TestConfig
from betmart.distributions import (
    BetaDist,
    DistributionSpec,
    check_support,
    finite_points,
    mean as dist_mean,
)
from betmart.errors import NeverRejects, NoPositiveGrowth, StateSpaceLimit
from betmart.mixtures import MixtureSpec, mixture_init, mixture_value

_BISECT_TOL = 1e-10
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_DP_OPS_BUDGET = 2_000_000_000
_PRUNE_TOL = 1e-18


def _upper_factor(t: float, cfg: TestConfig, c: float) -> float:
    return 1.0 - c * (t - cfg.mu) / (cfg.tau1 - cfg.mu)


def _log_factor_moment(dist: DistributionSpec, cfg: TestConfig, c: float, power: int) -> float:
    """E[(log factor)^power]; -inf (for power 1) if a zero/negative factor has mass."""
    pts = finite_points(dist)
    if pts is not None:
        total = 0.0
        for t, p in zip(*pts):
            f = _upper_factor(t, cfg, c)
            if f <= 0.0:
                return -math.inf if power == 1 else math.inf
            total += p * math.log(f) ** power
        return total
    assert isinstance(dist, BetaDist)
    pdf = stats.beta(dist.a, dist.b).pdf

    def integrand(t: float) -> float:
        f = _upper_factor(t, cfg, c)
        if f <= 0.0:
            return 0.0
        return pdf(t) * math.log(f) ** power

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=400)
    return val


def lambda_fn(dist: DistributionSpec, cfg: TestConfig, c: float) -> float:
    """Expected log growth per observation at stake c (can be -inf)."""
    check_support(dist, cfg)
    return _log_factor_moment(dist, cfg, c, 1)


@dataclass(frozen=True)
class GrowthCurve:
    c_grid: tuple[float, ...]
    lambda_vals: tuple[float, ...]


def growth_curve(dist: DistributionSpec, cfg: TestConfig, n: int = 99) -> GrowthCurve:
    cs = np.linspace(0.0, 1.0, n + 2)[1:-1]
    return GrowthCurve(tuple(cs), tuple(lambda_fn(dist, cfg, c) for c in cs))


def _require_positive_drift(dist: DistributionSpec, cfg: TestConfig) -> None:
    if dist_mean(dist) >= cfg.mu:
        raise NoPositiveGrowth(
            f"E(T)={dist_mean(dist)} is not below mu={cfg.mu}; lambda(c) <= 0 for every stake"
        )


def c_max(dist: DistributionSpec, cfg: TestConfig) -> float:
    """Largest stake with positive growth: the upper root of lambda on (0, 1).

    Returns 1 when lambda stays positive over the whole range.
    """
    _require_positive_drift(dist, cfg)
    hi = 1.0 - 1e-12
    if lambda_fn(dist, cfg, hi) > 0.0:
        return 1.0
    lo = 0.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if lambda_fn(dist, cfg, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def c_opt(dist: DistributionSpec, cfg: TestConfig) -> tuple[float, float]:
    """Argmax of the concave lambda by golden-section; returns (c, lambda(c))."""
    _require_positive_drift(dist, cfg)
    lo, hi = 1e-12, 1.0 - 1e-12
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = lambda_fn(dist, cfg, x1)
    f2 = lambda_fn(dist, cfg, x2)
    while hi - lo > _BISECT_TOL:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = lambda_fn(dist, cfg, x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = lambda_fn(dist, cfg, x1)
    c = 0.5 * (lo + hi)
    return c, lambda_fn(dist, cfg, c)


def kl_alt(a: float, b: float) -> float:
    """KL divergence between two-point distributions with success probs a, b."""
    if a == b:
        return 0.0
    terms = 0.0
    if a > 0.0:
        terms += a * math.log(a / b)
    if a < 1.0:
        terms += (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return terms


@dataclass(frozen=True)
class SizeBounds:
    lower: float
    upper: float
    coarse: float


def size_bounds(cfg: TestConfig, c: float) -> SizeBounds:
    """Type-I-error sandwich at the null boundary, plus the coarser lower bound."""
    if cfg.tau0 is None or cfg.tau1 is None:
        raise ValueError("size bounds need both support bounds")
    if not (0.0 < c < 1.0):
        raise ValueError(f"size bounds hold for 0 < c < 1, got {c}")
    lower = cfg.alpha / (1.0 - c * (cfg.tau0 - cfg.mu) / (cfg.tau1 - cfg.mu))
    coarse = cfg.alpha * (cfg.tau1 - cfg.mu) / (cfg.tau1 - cfg.tau0)
    return SizeBounds(lower=lower, upper=cfg.alpha, coarse=coarse)


def wald_n(dist: DistributionSpec, cfg: TestConfig, c: float) -> tuple[float, float]:
    """Wald approximations (mean, sd) of the first-crossing sample number."""
    lam = lambda_fn(dist, cfg, c)
    if not lam > 0.0:
        raise NoPositiveGrowth(f"lambda({c}) = {lam} <= 0: expected sample number is infinite")
    second = _log_factor_moment(dist, cfg, c, 2)
    var = max(second - lam * lam, 0.0)
    log_inv_alpha = cfg.log_threshold
    return log_inv_alpha / lam, math.sqrt(var * log_inv_alpha / lam**3)


def deterministic_n(t: float, cfg: TestConfig, policy: "float | ConstantStake | MixtureSpec") -> int:
    """First step at which the constant stream t pushes the martingale to 1/alpha."""
    thr = cfg.log_threshold
    if isinstance(policy, MixtureSpec):
        from betmart.mixtures import branch_denominators, node_log_factors

        state = mixture_init(policy)
        denom_pos, denom_neg = branch_denominators(state.nodes, cfg.mu, cfg.tau0, cfg.tau1)
        log_f = node_log_factors(state.nodes, t, cfg.mu, denom_pos, denom_neg)
        if float(log_f.max()) <= 0.0:
            raise NeverRejects(f"no mixture node grows on the constant stream t={t}")
        best = int(np.argmax(log_f))
        k_bound = int(math.ceil((thr - state.log_weights[best]) / log_f[best])) + 2
        vals = np.zeros_like(log_f)
        for k in range(1, k_bound + 1):
            vals += log_f
            v = state.log_weights + vals
            hi = float(v.max())
            if hi + math.log(float(np.exp(v - hi).sum())) >= thr:
                return k
        raise AssertionError("crossing bound exceeded; unreachable for a growing node")
    c = policy.c if isinstance(policy, ConstantStake) else float(policy)
    f = _upper_factor(t, cfg, c)
    if f <= 1.0:
        raise NeverRejects(f"factor {f} <= 1 on the constant stream t={t}")
    lf = math.log(f)
    k = max(1, math.ceil(thr / lf))
    while k > 1 and (k - 1) * lf >= thr:
        k -= 1
    while k * lf < thr:
        k += 1
    return k


def inverse_signal_threshold(cfg: TestConfig, c: float) -> float:
    """Mean threshold signalled by a small martingale value: M_k(c) <= alpha
    is evidence that E(T) > (1-c) mu + c tau0."""
    if cfg.tau0 is None:
        raise ValueError("needs tau0")
    if not (0.0 <= c <= 1.0):
        raise ValueError(f"c must be in [0, 1], got {c}")
    return (1.0 - c) * cfg.mu + c * cfg.tau0


@dataclass
class StopDist:
    """Exact distribution of the first-crossing time N, truncated at n_max.

    mean/sd/quantiles are conditional on stopping by n_max; quantiles map
    percent -> smallest n with conditional CDF >= percent/100.
    """

    n_max: int
    pmf: np.ndarray = field(repr=False)
    mean: float
    sd: float
    quantiles: dict[int, int]
    mass_not_stopped: float


def _stop_dist_from_pmf(pmf: np.ndarray, n_max: int, not_stopped: float) -> StopDist:
    stopped = float(pmf.sum())
    if stopped <= 0.0:
        return StopDist(n_max, pmf, math.nan, math.nan, {}, 1.0)
    ns = np.arange(1, n_max + 1)
    m = float((pmf * ns).sum() / stopped)
    var = float((pmf * ns * ns).sum() / stopped - m * m)
    cdf = np.cumsum(pmf) / stopped
    quantiles = {q: int(np.searchsorted(cdf, q / 100.0) + 1) for q in (50, 75, 90)}
    return StopDist(n_max, pmf, m, math.sqrt(max(var, 0.0)), quantiles, not_stopped)


def _two_point_stop(points, probs, cfg: TestConfig, c: float, n_max: int) -> StopDist:
    (t0, t1) = points
    (p0, p1) = probs
    f0 = _upper_factor(t0, cfg, c)
    f1 = _upper_factor(t1, cfg, c)
    thr = cfg.log_threshold
    pmf = np.zeros(n_max)
    if f0 <= 1.0:
        # largest factor cannot grow: log M_k <= 0 < threshold forever
        return _stop_dist_from_pmf(pmf, n_max, 1.0)
    log_f0 = math.log(f0)
    log_f1 = math.log(f1) if f1 > 0.0 else -math.inf
    if log_f0 == log_f1:
        n = deterministic_n(t0, cfg, c)
        if n <= n_max:
            pmf[n - 1] = 1.0
        return _stop_dist_from_pmf(pmf, n_max, 0.0 if n <= n_max else 1.0)
    if math.isinf(log_f1):
        r_cap = 1
    else:
        r_cap = int(math.floor((n_max * log_f0 - thr) / (log_f0 - log_f1))) + 1
        r_cap = max(min(r_cap, n_max), 1)
    if n_max * (r_cap + 1) > _DP_OPS_BUDGET:
        raise StateSpaceLimit(f"two-point recursion needs {n_max} x {r_cap + 1} updates")
    not_stopped = kernels.dp_two_point(p1, log_f0, log_f1, thr, n_max, r_cap, pmf)
    return _stop_dist_from_pmf(pmf, n_max, not_stopped)


def _lattice_stop(points, probs, cfg: TestConfig, c: float, n_max: int) -> StopDist:
    """Sparse lattice recursion over occurrence counts, for 3- or 4-point supports.

    States below _PRUNE_TOL mass are dropped into the not-stopped bucket
    (conservative); the aggregate error is bounded by n_max * states * tol.
    """
    logs = []
    for t in points:
        f = _upper_factor(t, cfg, c)
        logs.append(math.log(f) if f > 0.0 else -math.inf)
    thr = cfg.log_threshold
    pmf = np.zeros(n_max)
    states: dict[tuple[int, ...], float] = {(0,) * (len(points) - 1): 1.0}
    pruned = 0.0
    max_states = 500_000
    for k in range(1, n_max + 1):
        nxt: dict[tuple[int, ...], float] = {}
        for counts, mass in states.items():
            for j, pj in enumerate(probs):
                if j == 0:
                    key = counts
                else:
                    key = counts[: j - 1] + (counts[j - 1] + 1,) + counts[j:]
                nxt[key] = nxt.get(key, 0.0) + mass * pj
        if len(nxt) > max_states:
            raise StateSpaceLimit(f"lattice has {len(nxt)} states at step {k}")
        crossed = 0.0
        survivors: dict[tuple[int, ...], float] = {}
        for counts, mass in nxt.items():
            if mass < _PRUNE_TOL:
                pruned += mass
                continue
            r0 = k - sum(counts)
            log_m = r0 * logs[0] + sum(r * lf for r, lf in zip(counts, logs[1:]))
            if log_m >= thr:
                crossed += mass
            else:
                survivors[counts] = mass
        pmf[k - 1] = crossed
        states = survivors
    return _stop_dist_from_pmf(pmf, n_max, float(sum(states.values()) + pruned))


def exact_stop_dist(dist: DistributionSpec, cfg: TestConfig, c: float, n_max: int) -> StopDist:
    """Exact law of the first crossing of 1/alpha under iid finite-support data."""
    check_support(dist, cfg)
    pts = finite_points(dist)
    if pts is None:
        raise StateSpaceLimit("exact stopping distribution needs finite support")
    points, probs = pts
    order = np.argsort(points)
    points = tuple(points[i] for i in order)
    probs = tuple(probs[i] for i in order)
    if len(points) == 1:
        pmf = np.zeros(n_max)
        try:
            n = deterministic_n(points[0], cfg, c)
        except NeverRejects:
            return _stop_dist_from_pmf(pmf, n_max, 1.0)
        if n <= n_max:
            pmf[n - 1] = 1.0
        return _stop_dist_from_pmf(pmf, n_max, 0.0 if n <= n_max else 1.0)
    if len(points) == 2:
        return _two_point_stop(points, probs, cfg, c, n_max)
    if len(points) > 4:
        raise StateSpaceLimit("supports larger than 4 points are not tractable exactly")
    return _lattice_stop(points, probs, cfg, c, n_max)
