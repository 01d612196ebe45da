#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twin.

Run from the repository root:

    python benchmarks/bench_kernels.py

Representative hot-loop workloads: obstacle replay interpolation, the
path-safety distance sweep, and held-command forward simulation (the
command-vetting inner loop).
"""

from __future__ import annotations

import random
import time
from array import array

from masssim._kernels import _pure

try:
    from masssim._kernels import _native
except ImportError:
    _native = None


def time_it(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_interp(backend, rng: random.Random):
    n = 200
    ts = array("d", (float(i) for i in range(n)))
    xs = array("d", (rng.uniform(-500, 500) for _ in range(n)))
    ys = array("d", (rng.uniform(-500, 500) for _ in range(n)))
    qts = array("d", (rng.uniform(0, n - 1) for _ in range(20_000)))
    return lambda: backend.interp_positions(ts, xs, ys, qts)

def bench_sweep(backend, rng: random.Random):
    n = 20_000
    ax = array("d", (rng.uniform(-1e3, 1e3) for _ in range(n)))
    ay = array("d", (rng.uniform(-1e3, 1e3) for _ in range(n)))
    bx = array("d", (rng.uniform(-1e3, 1e3) for _ in range(n)))
    by = array("d", (rng.uniform(-1e3, 1e3) for _ in range(n)))
    return lambda: backend.distances(ax, ay, bx, by)


def bench_forward(backend, rng: random.Random):
    own = (0.0, 0.0, 5.0, 45.0, 0.5, 0.0)
    cmd = (0.8, 5.0, 0.0)
    params = (10.0, 35.0, 0.5, 0.5, 10.0, 0.01, 0.06)
    m = 8
    ox = [rng.uniform(-300, 300) for _ in range(m)]
    oy = [rng.uniform(-300, 300) for _ in range(m)]
    ovx = [rng.uniform(-5, 5) for _ in range(m)]
    ovy = [rng.uniform(-5, 5) for _ in range(m)]

    def run():
        for _ in range(50):
            backend.forward_min_distance(own, cmd, params, ox, oy, ovx, ovy, 0.1, 300)

    return run


def main() -> None:
    cases = [
        ("interp_positions (20k queries)", bench_interp),
        ("distance sweep (20k pairs)", bench_sweep),
        ("forward_min_distance (50 vets x 300 steps x 8 obstacles)", bench_forward),
    ]
    print(f"{'workload':<58}{'pure':>10}{'native':>10}{'speedup':>9}")
    for name, factory in cases:
        pure_s = time_it(factory(_pure, random.Random(1)))
        if _native is not None:
            native_s = time_it(factory(_native, random.Random(1)))
            ratio = pure_s / native_s if native_s > 0 else float("inf")
            print(f"{name:<58}{pure_s * 1e3:>8.2f}ms{native_s * 1e3:>8.2f}ms{ratio:>8.1f}x")
        else:
            print(f"{name:<58}{pure_s * 1e3:>8.2f}ms{'n/a':>10}{'':>9}")
    if _native is None:
        print("\ncompiled backend not built; install with a C compiler to compare")


if __name__ == "__main__":
    main()
