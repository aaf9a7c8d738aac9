#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Kernel timings call both variants directly. The end-to-end row times one
rate-experiment cell in a subprocess with and without AWEST_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from awest import kernels

END_TO_END = """
import time
from awest.adapted_ot import estimate_aw
from awest.processes import MemoryChainParams, exact_law_memory_chain, simulate_memory_chain
mu = exact_law_memory_chain(0.99)
estimate_aw(mu, simulate_memory_chain(MemoryChainParams(0.99, 2), 200, 0, 0))
t0 = time.perf_counter()
for r in range(20):
    estimate_aw(mu, simulate_memory_chain(MemoryChainParams(0.99, 2), 2000, 0, r))
print(time.perf_counter() - t0)
"""


def cases(rng):
    n = 200_000
    eps = rng.integers(-1, 2, n).astype(float)
    keep = rng.random(n - 1) < 0.99
    branch = rng.integers(0, 3, n - 1)
    eps_ext = rng.integers(-1, 2, n + 2).astype(float)
    x = np.sort(rng.normal(size=2000))
    y = np.sort(rng.normal(size=1500))
    wx, wy = rng.dirichlet(np.ones(x.size)), rng.dirichlet(np.ones(y.size))
    a, b = rng.dirichlet(np.ones(60)), rng.dirichlet(np.ones(50))
    C = rng.random((60, 50))
    return [
        ("memory_chain_path n=2e5", "memory_chain_path", (eps, keep)),
        ("seasonal_path n=2e5", "seasonal_path", (eps_ext, branch, 2)),
        ("quantile_coupling 2000x1500", "quantile_coupling", (x, wx, y, wy)),
        ("transport_ssp 60x50", "transport_ssp", (a, b, C, 1e-14)),
    ]


def best(fn, args, repeat):
    fn(*args)  # warm up, includes compilation
    number = 3
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def end_to_end(disable: bool) -> float:
    env = dict(os.environ, AWEST_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, base, fargs in cases(rng):
        slow = best(getattr(kernels, base + "_numpy"), fargs, args.repeat)
        fast = best(getattr(kernels, base + "_numba"), fargs, args.repeat)
        print(f"{name:32s} {slow * 1e3:10.3f} {fast * 1e3:10.3f} {slow / fast:8.1f}")
    slow, fast = end_to_end(True), end_to_end(False)
    print(f"{'estimate_aw N=2000 x20':32s} {slow * 1e3:10.1f} {fast * 1e3:10.1f} {slow / fast:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
