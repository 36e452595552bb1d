"""Pure numpy implementations of the hot kernels.

Mirrors the compiled module in ``_core.pyx`` function for function. Inputs
are assumed validated by the calling layer: stakes produce nonnegative
factors, arrays are float64 and contiguous. Factors are computed as
1 - c * ((t - mu)/denom) so a full stake against an observation at the
bound yields exactly zero; zero factors map to -inf log values
(absorption) and never to NaN.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 16  # cap on steps x nodes elements held at once


def _log_pos(f: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(f > 0.0, np.log(np.where(f > 0.0, f, 1.0)), -np.inf)


def fold_constant(ts: np.ndarray, mu: float, denom: float, c: float, out_log: np.ndarray) -> int:
    """Fill ``out_log[k] = log M_{k+1}`` for a constant-stake fold.

    Returns the 0-based index of the first zero factor, or -1 if none.
    """
    lf = _log_pos(1.0 - c * ((ts - mu) / denom))
    np.cumsum(lf, out=out_log)
    absorbed = np.flatnonzero(np.isneginf(lf))
    return int(absorbed[0]) if absorbed.size else -1


def first_crossing_constant(ts: np.ndarray, mu: float, denom: float, c: float, log_threshold: float) -> int:
    """First 1-based step where the running fold reaches the threshold; 0 if never."""
    cum = np.cumsum(_log_pos(1.0 - c * ((ts - mu) / denom)))
    hits = np.flatnonzero(cum >= log_threshold)
    return int(hits[0]) + 1 if hits.size else 0


def _node_log_factors(block: np.ndarray, nodes: np.ndarray, mu: float, denom_pos: float, denom_neg: float) -> np.ndarray:
    """(steps x nodes) log factors; node sign picks the branch denominator."""
    r_pos = (block - mu) / denom_pos
    r_neg = (block - mu) / denom_neg
    r = np.where(nodes[None, :] >= 0.0, r_pos[:, None], r_neg[:, None])
    return _log_pos(1.0 - nodes[None, :] * r)


def mixture_advance(
    ts: np.ndarray,
    nodes: np.ndarray,
    mu: float,
    denom_pos: float,
    denom_neg: float,
    log_vals: np.ndarray,
) -> None:
    """Advance per-node log values over a batch of observations, in place."""
    n = ts.shape[0]
    m = nodes.shape[0]
    if n == 0 or m == 0:
        return
    step = max(1, _CHUNK // m)
    for start in range(0, n, step):
        lf = _node_log_factors(ts[start : start + step], nodes, mu, denom_pos, denom_neg)
        log_vals += lf.sum(axis=0)


def _rows_logsumexp(mat: np.ndarray) -> np.ndarray:
    mx = np.max(mat, axis=1)
    out = np.full(mat.shape[0], -np.inf)
    ok = np.isfinite(mx)
    if np.any(ok):
        shifted = mat[ok] - mx[ok, None]
        out[ok] = mx[ok] + np.log(np.exp(shifted).sum(axis=1))
    return out


def mixture_crossing(
    ts: np.ndarray,
    nodes: np.ndarray,
    log_w: np.ndarray,
    mu: float,
    denom_pos: float,
    denom_neg: float,
    log_threshold: float,
    log_vals: np.ndarray,
) -> int:
    """Advance node log values step by step until the mixture value crosses.

    Returns the 1-based crossing step and leaves ``log_vals`` at that step's
    state; returns 0 (with ``log_vals`` fully advanced) if never crossed.
    """
    n = ts.shape[0]
    m = nodes.shape[0]
    step = max(1, _CHUNK // max(m, 1))
    for start in range(0, n, step):
        lf = _node_log_factors(ts[start : start + step], nodes, mu, denom_pos, denom_neg)
        cum = log_vals[None, :] + np.cumsum(lf, axis=0)
        vals = _rows_logsumexp(cum + log_w[None, :])
        hits = np.flatnonzero(vals >= log_threshold)
        if hits.size:
            i = int(hits[0])
            log_vals[:] = cum[i]
            return start + i + 1
        log_vals[:] = cum[-1]
    return 0


def dp_two_point(
    p1: float,
    log_f0: float,
    log_f1: float,
    log_threshold: float,
    n_max: int,
    r_cap: int,
    pmf_out: np.ndarray,
) -> float:
    """Exact first-crossing mass for an iid two-point stream, by forward DP.

    State is the count r of high observations; log M_k = (k-r) log_f0 + r log_f1
    with log_f0 > log_f1, so the crossing set at step k is {r <= boundary(k)}.
    Fills ``pmf_out[k-1] = P(N = k)`` and returns the not-stopped mass.
    """
    x = np.zeros(r_cap + 1)
    x[0] = 1.0
    lost = 0.0
    p0 = 1.0 - p1
    neg_inf_f1 = np.isneginf(log_f1)
    for k in range(1, n_max + 1):
        lost += p1 * x[r_cap]
        x[1:] = p0 * x[1:] + p1 * x[:-1]
        x[0] *= p0
        if neg_inf_f1:
            boundary = 0 if k * log_f0 >= log_threshold else -1
        else:
            boundary = int(np.floor((k * log_f0 - log_threshold) / (log_f0 - log_f1)))
            # float roundoff can put the edge one lattice row off; fix by direct test
            while boundary + 1 <= r_cap and (k - (boundary + 1)) * log_f0 + (boundary + 1) * log_f1 >= log_threshold:
                boundary += 1
            while boundary >= 0 and (k - boundary) * log_f0 + boundary * log_f1 < log_threshold:
                boundary -= 1
        if boundary >= 0:
            hi = min(boundary, r_cap)
            pmf_out[k - 1] = x[: hi + 1].sum()
            x[: hi + 1] = 0.0
        else:
            pmf_out[k - 1] = 0.0
    return float(x.sum() + lost)
