"""Benchmark the compiled kernels against the pure numpy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import math
import timeit

import numpy as np

from betmart.kernels import _core_py

try:
    from betmart.kernels import _core
except ImportError:
    _core = None

REPEAT = 5


def _best(fn, number: int) -> float:
    return min(timeit.repeat(fn, number=number, repeat=REPEAT)) / number


def bench_fold(impl):
    rng = np.random.default_rng(0)
    ts = np.ascontiguousarray(rng.beta(0.4, 9.0, size=100_000))
    out = np.empty(ts.size)
    return _best(lambda: impl.fold_constant(ts, 0.05, 0.95, 0.6, out), 20)


def bench_crossing(impl):
    rng = np.random.default_rng(1)
    ts = np.ascontiguousarray(np.where(rng.random(100_000) < 0.05, 1.0, 0.0))
    thr = math.log(1 / 0.05)
    return _best(lambda: impl.first_crossing_constant(ts, 0.05, 0.95, 0.6, thr), 20)


def bench_mixture(impl):
    rng = np.random.default_rng(2)
    ts = np.ascontiguousarray(rng.beta(0.4, 9.0, size=20_000))
    nodes = np.ascontiguousarray(np.linspace(0.6, 1.0, 64))
    log_w = np.full(64, -math.log(64.0))
    thr = math.log(1 / 0.05)

    def run():
        vals = np.zeros(64)
        impl.mixture_crossing(ts, nodes, log_w, 0.05, 0.95, 1.0, thr, vals)

    return _best(run, 5)


def bench_dp(impl):
    log_f0 = math.log(1 + 0.6 * 0.05 / 0.95)
    log_f1 = math.log(0.4)
    thr = math.log(1 / 0.05)
    pmf = np.zeros(20_000)

    def run():
        impl.dp_two_point(0.05, log_f0, log_f1, thr, 20_000, 700, pmf)

    return _best(run, 2)


BENCHES = [
    ("fold_constant 100k steps", bench_fold),
    ("first_crossing 100k steps", bench_crossing),
    ("mixture_crossing 20k x 64", bench_mixture),
    ("dp_two_point 20k x 700", bench_dp),
]


def main() -> None:
    impls = [("python", _core_py)]
    if _core is not None:
        impls.append(("cython", _core))
    else:
        print("compiled kernels unavailable; timing the fallback only")
    width = max(len(name) for name, _ in BENCHES)
    header = f"{'kernel':<{width}}  " + "".join(f"{name:>12}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, bench in BENCHES:
        times = [bench(impl) for _, impl in impls]
        row = f"{name:<{width}}  " + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
