#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Both backends are loaded explicitly (no environment tricks needed), fed
identical inputs, timed, and checked for bitwise agreement.

Usage: python benchmarks/bench_kernels.py [--chain-steps N] [--ode-steps N]
"""

import argparse
import time

import numpy as np

from chaintest._kernels import fallback

try:
    from chaintest._kernels import _speedups as compiled
except ImportError:
    compiled = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_finite_chain(steps):
    kernel = np.array([[0.9, 0.1], [0.1, 0.9]])
    cum = np.cumsum(kernel, axis=1)
    cum[:, -1] = 1.0
    uniforms = np.random.default_rng(0).random(steps)
    rows = []
    slow_t, slow = timed(fallback.finite_chain_path, cum, 0, uniforms, repeat=1)
    rows.append(("python", slow_t))
    if compiled is not None:
        fast_t, fast = timed(compiled.finite_chain_path, cum, 0, uniforms)
        rows.append(("compiled", fast_t))
        assert np.array_equal(fast, slow), "backends disagree"
    return f"finite-chain walk, {steps:,} steps", rows


def bench_ode(steps):
    from chaintest import jakstat

    params = np.array([0.5, 2.0, 0.1, 0.5])
    init = jakstat.initial_state(stat=4.0)
    dt = 60.0 / steps
    rows = []
    slow_t, (slow, _) = timed(fallback.jakstat_path, params, init, dt, steps,
                              repeat=1)
    rows.append(("python", slow_t))
    if compiled is not None:
        fast_t, (fast, _) = timed(compiled.jakstat_path, params, init, dt, steps)
        rows.append(("compiled", fast_t))
        assert np.array_equal(fast, slow), "backends disagree"
    return f"pathway RK4 integration, {steps:,} steps", rows


def bench_probe(steps):
    from chaintest import jakstat

    params = np.array([0.5, 2.0, 0.1, 0.5])
    init = jakstat.initial_state(stat=4.0)
    times = np.arange(1, 19) * (60.0 / 18.0)
    dt = 60.0 / steps
    rows = []
    slow_t, slow = timed(fallback.jakstat_probe, params, init, dt, steps,
                         times, repeat=1)
    rows.append(("python", slow_t))
    if compiled is not None:
        fast_t, fast = timed(compiled.jakstat_probe, params, init, dt, steps,
                             times)
        rows.append(("compiled", fast_t))
        assert np.array_equal(fast[0], slow[0]) and fast[2] == slow[2]
    return f"likelihood probe (no path storage), {steps:,} steps", rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chain-steps", type=int, default=2_000_000)
    parser.add_argument("--ode-steps", type=int, default=6_000)
    args = parser.parse_args()

    if compiled is None:
        print("compiled backend not built; timing the fallback only\n")

    for title, rows in (
        bench_finite_chain(args.chain_steps),
        bench_ode(args.ode_steps),
        bench_probe(args.ode_steps),
    ):
        print(title)
        base = rows[0][1]
        for name, seconds in rows:
            speedup = f"  ({base / seconds:5.1f}x)" if name == "compiled" else ""
            print(f"  {name:9s} {seconds * 1e3:10.2f} ms{speedup}")
        if len(rows) == 2:
            print("  outputs bitwise identical")
        print()


if __name__ == "__main__":
    main()
