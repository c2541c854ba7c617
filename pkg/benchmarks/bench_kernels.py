#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallbacks.

Usage:
  python3 benchmarks/bench_kernels.py [--repeats 5]

Times the four hot kernels on workloads typical of an estimation run
(grid assembly dominates the moment least-squares estimator) and reports
the per-call minimum over the repeats, plus an end-to-end estimate timing
for whichever backend the package selected at import.
"""

from __future__ import annotations

import argparse
import time

import numpy as np


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    from mcvar import _kernels_py, kernels

    backends = [("python", _kernels_py)]
    try:
        from mcvar import _kernels

        backends.insert(0, ("compiled", _kernels))
    except ImportError:
        print("extension not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    m = 20000
    y = rng.standard_normal(m)
    y -= y.mean()
    alphas = np.linspace(-0.95, 0.95, 901)
    r = rng.standard_normal(m) * 0.99 ** np.arange(m)
    lam = 0.9
    x = rng.standard_normal(m)
    s = 100
    rows = rng.uniform(0.01, 1.0, (s, s))
    rows /= rows.sum(axis=1, keepdims=True)
    cum = np.ascontiguousarray(np.cumsum(rows, axis=1))
    u = rng.random(m)

    workloads = [
        ("autocov_direct (M=20000, all lags)", lambda k: k.autocov_direct(y, m - 1)),
        ("moment_weighted_sums (s=901, K=20000)", lambda k: k.moment_weighted_sums(alphas, r)),
        ("ar1_filter (M=20000)", lambda k: k.ar1_filter(lam, x)),
        ("mh_path (s=100, M=20000)", lambda k: k.mh_path(cum, 0, u)),
    ]

    print(f"selected backend: {kernels.BACKEND}")
    header = f"{'kernel':42s}" + "".join(f"{name:>12s}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, call in workloads:
        times = [_time(lambda: call(mod), args.repeats) for _, mod in backends]
        line = f"{label:42s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2 and times[0] > 0:
            line += f"{times[1] / times[0]:9.1f}x"
        print(line)

    # end-to-end: one moment least-squares estimate on a 4-component chain
    from mcvar import RngStream, momentls_avar, simulate_var1, var1_preset

    model = var1_preset("1")
    chain = simulate_var1(model, m, RngStream(0, 1))
    best = _time(lambda: momentls_avar(chain), max(2, args.repeats // 2))
    print(f"\nmomentls_avar end-to-end (M={m}, d=4, {kernels.BACKEND}): {best:.3f}s")


if __name__ == "__main__":
    main()
