# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; see _core_py.py for the reference semantics."""

from libc.math cimport log, exp, floor, INFINITY

import numpy as np


cdef inline double _log_factor(double c, double r) nogil:
    cdef double f = 1.0 - c * r
    if f > 0.0:
        return log(f)
    return -INFINITY


def fold_constant(const double[::1] ts, double mu, double denom, double c, double[::1] out_log):
    cdef Py_ssize_t n = ts.shape[0]
    cdef Py_ssize_t k
    cdef double acc = 0.0
    cdef double lf
    cdef Py_ssize_t absorbed = -1
    for k in range(n):
        lf = _log_factor(c, (ts[k] - mu) / denom)
        if lf == -INFINITY and absorbed < 0:
            absorbed = k
        acc += lf
        out_log[k] = acc
    return int(absorbed)


def first_crossing_constant(const double[::1] ts, double mu, double denom, double c, double log_threshold):
    cdef Py_ssize_t n = ts.shape[0]
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(n):
        acc += _log_factor(c, (ts[k] - mu) / denom)
        if acc >= log_threshold:
            return int(k + 1)
    return 0


def mixture_advance(
    const double[::1] ts,
    const double[::1] nodes,
    double mu,
    double denom_pos,
    double denom_neg,
    double[::1] log_vals,
):
    cdef Py_ssize_t n = ts.shape[0]
    cdef Py_ssize_t m = nodes.shape[0]
    cdef Py_ssize_t k, j
    cdef double r_pos, r_neg
    for k in range(n):
        r_pos = (ts[k] - mu) / denom_pos
        r_neg = (ts[k] - mu) / denom_neg
        for j in range(m):
            log_vals[j] += _log_factor(nodes[j], r_pos if nodes[j] >= 0.0 else r_neg)


def mixture_crossing(
    const double[::1] ts,
    const double[::1] nodes,
    const double[::1] log_w,
    double mu,
    double denom_pos,
    double denom_neg,
    double log_threshold,
    double[::1] log_vals,
):
    cdef Py_ssize_t n = ts.shape[0]
    cdef Py_ssize_t m = nodes.shape[0]
    cdef Py_ssize_t k, j
    cdef double r_pos, r_neg, mx, s, v
    for k in range(n):
        r_pos = (ts[k] - mu) / denom_pos
        r_neg = (ts[k] - mu) / denom_neg
        mx = -INFINITY
        for j in range(m):
            log_vals[j] += _log_factor(nodes[j], r_pos if nodes[j] >= 0.0 else r_neg)
            v = log_vals[j] + log_w[j]
            if v > mx:
                mx = v
        if mx == -INFINITY:
            continue
        s = 0.0
        for j in range(m):
            v = log_vals[j] + log_w[j]
            if v != -INFINITY:
                s += exp(v - mx)
        if mx + log(s) >= log_threshold:
            return int(k + 1)
    return 0


def dp_two_point(
    double p1,
    double log_f0,
    double log_f1,
    double log_threshold,
    Py_ssize_t n_max,
    Py_ssize_t r_cap,
    double[::1] pmf_out,
):
    cdef double[::1] x = np.zeros(r_cap + 1)
    cdef double lost = 0.0
    cdef double p0 = 1.0 - p1
    cdef double acc
    cdef Py_ssize_t k, r
    cdef long boundary, hi
    cdef bint f1_neg_inf = log_f1 == -INFINITY
    x[0] = 1.0
    for k in range(1, n_max + 1):
        lost += p1 * x[r_cap]
        for r in range(r_cap, 0, -1):
            x[r] = p0 * x[r] + p1 * x[r - 1]
        x[0] *= p0
        if f1_neg_inf:
            boundary = 0 if k * log_f0 >= log_threshold else -1
        else:
            boundary = <long> floor((k * log_f0 - log_threshold) / (log_f0 - log_f1))
            while boundary + 1 <= r_cap and (k - (boundary + 1)) * log_f0 + (boundary + 1) * log_f1 >= log_threshold:
                boundary += 1
            while boundary >= 0 and (k - boundary) * log_f0 + boundary * log_f1 < log_threshold:
                boundary -= 1
        if boundary >= 0:
            hi = boundary if boundary < r_cap else r_cap
            acc = 0.0
            for r in range(hi + 1):
                acc += x[r]
                x[r] = 0.0
            pmf_out[k - 1] = acc
        else:
            pmf_out[k - 1] = 0.0
    acc = 0.0
    for r in range(r_cap + 1):
        acc += x[r]
    return float(acc + lost)
