"""Timing comparison of the numba-compiled kernels against the NumPy
fallbacks.

The script re-invokes itself in a worker subprocess with CYCLETREES_NUMBA
toggled, so each measurement runs the genuine backend selected at import
time.

    python3 benchmarks/bench_backends.py
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def kalman_case(T=600):
    from cycletrees.panel import observation_structure
    from cycletrees.statespace import ModelShape, build_trend_cycle, simulate

    shape = ModelShape(n=9, p=12)
    params, sets = build_trend_cycle(shape)
    cols = list(shape.cycle_columns(0))
    params.transition[shape.cycle_start, cols[0]] = 0.8
    for i in range(9):
        params.transition[shape.idio_start + i, shape.idio_start + i] = 0.3
        if i:
            params.loadings[i, cols[0]] = 0.7
    params.sigma = np.full(shape.r, 0.1)
    params.omega0 = 0.1 * np.eye(shape.q)
    panel, _ = simulate(params, T, seed=0, index_sets=sets)
    mask = observation_structure(panel)
    return (panel.values.T.copy(), mask.observed, params.transition,
            params.loadings, params.innovation_cov(), params.eps,
            params.mu0, params.omega0, True)


def tree_case(n=200, cols=77):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((n, cols))
    y = x[:, 0] + rng.standard_normal(n)
    return x, y, np.arange(n, dtype=np.int64), 10


def time_call(func, args, repeat):
    func(*args)  # warm up / compile
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - start)
    return best


def run_worker(kernel: str) -> float:
    if kernel == "kalman":
        from cycletrees._kalman_impl import filter_smooth_core
        return time_call(filter_smooth_core, kalman_case(), repeat=3)
    if kernel == "tree":
        from cycletrees._tree_impl import best_split
        return time_call(best_split, tree_case(), repeat=5)
    raise SystemExit(f"unknown kernel {kernel}")


def measure(kernel: str, numba: bool) -> float:
    env = dict(os.environ, CYCLETREES_NUMBA="1" if numba else "0")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker", kernel],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip())["seconds"]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--worker", help="internal: time one kernel")
    args = parser.parse_args()
    if args.worker:
        print(json.dumps({"seconds": run_worker(args.worker)}))
        return

    cases = [("kalman", "filter+smoother pass (q=32, T=600)"),
             ("tree", "best-split scan (200 rows x 77 cols)")]
    print(f"{'kernel':<40}{'numpy fallback':>16}{'numba':>12}{'speedup':>10}")
    for kernel, label in cases:
        slow = measure(kernel, numba=False)
        fast = measure(kernel, numba=True)
        print(f"{label:<40}{slow * 1e3:>14.1f}ms{fast * 1e3:>10.2f}ms"
              f"{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
