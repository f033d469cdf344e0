#!/usr/bin/env python3
"""Compare the numba-compiled kernels against the pure-numpy fallback.

Runs itself twice in subprocesses (with and without TRFD_DISABLE_NUMBA) so
each backend gets a clean import, then reports timings and checks that both
backends produce bit-identical results.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_backend():
    from trfd.kernels import (NUMBA_ENABLED, hash_noise,
                              solve_minmax_subgradient)

    rng = np.random.default_rng(0)
    cells = np.array([101, 5, 999, 0, 42, 7], dtype=np.int64)

    # warmup (includes JIT compilation when enabled)
    hash_noise(123, cells, 201)
    dim, m = 6, 64
    jac = np.ascontiguousarray(rng.uniform(-5, 5, (m, dim)))
    resp = rng.uniform(-30, 0, m)
    center = rng.uniform(1, 2, dim)
    lower, upper = np.zeros(dim), np.full(dim, 3.0)
    w = np.ones(dim)
    starts = rng.uniform(-0.5, 0.5, (9, dim))
    solve_minmax_subgradient(jac, resp, center, lower, upper, w, 1.0, starts, 500)

    t0 = time.perf_counter()
    n_noise = 20000
    acc = 0.0
    for i in range(n_noise):
        acc += hash_noise(i, cells, 201)[0]
    t_noise = time.perf_counter() - t0

    t0 = time.perf_counter()
    n_solve = 50
    for _ in range(n_solve):
        z = solve_minmax_subgradient(jac, resp, center, lower, upper, w, 1.0,
                                     starts, 500)
    t_solve = time.perf_counter() - t0

    sample = hash_noise(987654321, cells, 16)
    return {
        "numba": NUMBA_ENABLED,
        "noise_us_per_call": 1e6 * t_noise / n_noise,
        "solve_ms_per_call": 1e3 * t_solve / n_solve,
        "noise_sample": sample.tolist(),
        "solve_sample": z.tolist(),
        "acc": acc,
    }


def run_child(disable: bool):
    env = dict(os.environ, TRFD_DISABLE_NUMBA="1" if disable else "")
    out = subprocess.run([sys.executable, __file__, "--child"], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    if "--child" in sys.argv:
        print(json.dumps(bench_backend()))
        return
    jit = run_child(disable=False)
    plain = run_child(disable=True)
    print(f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    print(f"{'hash_noise (us/call)':<28}{jit['noise_us_per_call']:>12.2f}"
          f"{plain['noise_us_per_call']:>12.2f}"
          f"{plain['noise_us_per_call'] / jit['noise_us_per_call']:>9.1f}x")
    print(f"{'subproblem solve (ms/call)':<28}{jit['solve_ms_per_call']:>12.2f}"
          f"{plain['solve_ms_per_call']:>12.2f}"
          f"{plain['solve_ms_per_call'] / jit['solve_ms_per_call']:>9.1f}x")
    same = (jit["noise_sample"] == plain["noise_sample"]
            and jit["solve_sample"] == plain["solve_sample"])
    print("backend agreement:", "bit-identical" if same else "MISMATCH")
    if not same:
        sys.exit(1)


if __name__ == "__main__":
    main()
