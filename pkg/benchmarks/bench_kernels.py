#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the NumPy fallback.

The sizes mirror what one BO iteration of a tuning session actually does:
a covariance build over the observed points, cross-covariance and expected
improvement over the 2500-candidate set, and batch expansion of candidates
through a 90-knob sparse projection.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from knobtune.kernels import _pykern

try:
    from knobtune.kernels import _ckern
except ImportError:
    _ckern = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def cases():
    rng = np.random.default_rng(0)
    for d in (16, 90):
        train = np.ascontiguousarray(rng.uniform(-1, 1, (100, d)))
        cand = np.ascontiguousarray(rng.uniform(-1, 1, (2500, d)))
        yield (f"matern52 100x100   d={d}",
               lambda impl, t=train: impl.matern52_cross(t, t, 0.5))
        yield (f"matern52 100x2500  d={d}",
               lambda impl, t=train, c=cand: impl.matern52_cross(t, c, 0.5))
    mu = rng.normal(size=2500)
    var = np.abs(rng.normal(size=2500))
    yield ("expected_improvement 2500",
           lambda impl: impl.expected_improvement(mu, var, 0.5))
    h = rng.integers(0, 16, size=90).astype(np.int64)
    sigma = rng.choice([-1.0, 1.0], size=90)
    pts = np.ascontiguousarray(rng.uniform(-1, 1, (2500, 16)))
    yield ("hesbo_expand 2500x(16->90)",
           lambda impl: impl.hesbo_expand(h, sigma, pts))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=7,
                        help="timing repetitions (best-of)")
    args = parser.parse_args()

    if _ckern is None:
        print("compiled extension not built; showing NumPy backend only")
    header = f"{'kernel':30s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, call in cases():
        pure = timeit(lambda: call(_pykern), args.repeat)
        if _ckern is None:
            print(f"{name:30s} {pure * 1e3:9.3f}ms {'-':>10s} {'-':>8s}")
            continue
        compiled = timeit(lambda: call(_ckern), args.repeat)
        print(f"{name:30s} {pure * 1e3:9.3f}ms {compiled * 1e3:9.3f}ms "
              f"{pure / compiled:7.2f}x")


if __name__ == "__main__":
    main()
