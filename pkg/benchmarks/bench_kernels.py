"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import timeit

import numpy as np

from crowdcast import _kernels_py as pure
from crowdcast import kernels


def make_series(n=500, seed=0):
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    for t in range(1, n):
        x[t] = 0.6 * x[t - 1] + rng.standard_normal()
    return x


def bench(label, fn, repeats):
    best = min(timeit.repeat(fn, number=1, repeat=repeats))
    print(f"  {label:<14} {best * 1e3:9.3f} ms")
    return best


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    if not kernels.HAVE_COMPILED:
        print("compiled extension unavailable; nothing to compare")
        return
    x = make_series()
    phi = np.array([0.5])
    theta = np.array([0.2])
    cases = [
        ("ses_sse", lambda k: lambda: k.ses_sse(x, 0.3)),
        ("holt_sse", lambda k: lambda: k.holt_sse(x, 0.3, 0.1)),
        ("arma_css", lambda k: lambda: k.arma_css(x, phi, theta, 5)),
        ("arma_fit(1,1)", lambda k: lambda: k.arma_fit(x, 1, 1, 5)),
        ("arma_fit(2,2)", lambda k: lambda: k.arma_fit(x, 2, 2, 5)),
    ]
    print(f"n = {x.size}, best of {repeats} runs")
    for name, make in cases:
        print(name)
        fast = bench("compiled", make(kernels), repeats)
        slow = bench("pure python", make(pure), repeats)
        print(f"  {'speedup':<14} {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
