"""Backend parity: the compiled kernels must match the numpy fallback."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from betmart import kernels
from betmart.kernels import _core_py

try:
    from betmart.kernels import _core
except ImportError:  # pragma: no cover - fallback-only environments
    _core = None

BACKENDS = [_core_py] if _core is None else [_core_py, _core]
needs_compiled = pytest.mark.skipif(_core is None, reason="compiled kernels unavailable")


def _random_stream(rng, n=400):
    return np.ascontiguousarray(rng.beta(0.4, 8.0, size=n))


@needs_compiled
def test_fold_constant_parity():
    rng = np.random.default_rng(0)
    for _ in range(10):
        ts = _random_stream(rng)
        out_a = np.empty(ts.size)
        out_b = np.empty(ts.size)
        a = _core.fold_constant(ts, 0.05, 0.95, 0.73, out_a)
        b = _core_py.fold_constant(ts, 0.05, 0.95, 0.73, out_b)
        assert a == b
        np.testing.assert_allclose(out_a, out_b, rtol=1e-13, atol=1e-13)


@needs_compiled
def test_fold_constant_absorption_parity():
    ts = np.array([0.0, 1.0, 0.2])
    out_a = np.empty(3)
    out_b = np.empty(3)
    assert _core.fold_constant(ts, 0.05, 0.95, 1.0, out_a) == 1
    assert _core_py.fold_constant(ts, 0.05, 0.95, 1.0, out_b) == 1
    assert out_a[1] == -math.inf and out_b[2] == -math.inf


@needs_compiled
def test_first_crossing_parity():
    rng = np.random.default_rng(1)
    thr = math.log(20.0)
    for _ in range(20):
        ts = _random_stream(rng, n=1000)
        for c in (0.3, 0.6, 0.9):
            assert _core.first_crossing_constant(ts, 0.05, 0.95, c, thr) == _core_py.first_crossing_constant(
                ts, 0.05, 0.95, c, thr
            )


@needs_compiled
def test_mixture_advance_parity():
    rng = np.random.default_rng(2)
    nodes = np.concatenate([np.linspace(-0.95, -0.05, 13), np.linspace(0.05, 0.95, 17)])
    for _ in range(5):
        ts = _random_stream(rng, n=300)
        vals_a = np.zeros(nodes.size)
        vals_b = np.zeros(nodes.size)
        _core.mixture_advance(ts, nodes, 0.05, 0.95, 0.05, vals_a)
        _core_py.mixture_advance(ts, nodes, 0.05, 0.95, 0.05, vals_b)
        np.testing.assert_allclose(vals_a, vals_b, rtol=1e-11, atol=1e-11)


@needs_compiled
def test_mixture_crossing_parity():
    rng = np.random.default_rng(3)
    nodes = np.linspace(0.6, 1.0, 64)
    log_w = np.full(64, -math.log(64.0))
    thr = math.log(20.0)
    for _ in range(10):
        ts = np.ascontiguousarray(np.where(rng.random(600) < 0.02, 1.0, 0.0))
        va = np.zeros(64)
        vb = np.zeros(64)
        ka = _core.mixture_crossing(ts, nodes, log_w, 0.05, 0.95, 1.0, thr, va)
        kb = _core_py.mixture_crossing(ts, nodes, log_w, 0.05, 0.95, 1.0, thr, vb)
        assert ka == kb
        np.testing.assert_allclose(va, vb, rtol=1e-11, atol=1e-11)


@needs_compiled
def test_dp_two_point_parity():
    log_f0 = math.log(1 + 0.6 * 0.05 / 0.95)
    log_f1 = math.log(0.4)
    thr = math.log(20.0)
    pa = np.zeros(3000)
    pb = np.zeros(3000)
    ra = _core.dp_two_point(0.02, log_f0, log_f1, thr, 3000, 120, pa)
    rb = _core_py.dp_two_point(0.02, log_f0, log_f1, thr, 3000, 120, pb)
    assert ra == pytest.approx(rb, abs=1e-14)
    np.testing.assert_allclose(pa, pb, rtol=1e-12, atol=1e-16)


@needs_compiled
def test_dp_two_point_neg_inf_branch_parity():
    thr = math.log(20.0)
    log_f0 = math.log(1 + 0.05 / 0.95)
    pa = np.zeros(200)
    pb = np.zeros(200)
    ra = _core.dp_two_point(0.02, log_f0, -math.inf, thr, 200, 1, pa)
    rb = _core_py.dp_two_point(0.02, log_f0, -math.inf, thr, 200, 1, pb)
    assert ra == pytest.approx(rb, abs=1e-15)
    assert pa[58] == pytest.approx(0.98**59, rel=1e-12)
    np.testing.assert_allclose(pa, pb, rtol=1e-12, atol=0)


def test_env_var_forces_pure_python_backend():
    code = "import betmart.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, BETMART_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "python"


def test_active_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
