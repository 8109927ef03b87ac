"""Wall-clock comparison of the compiled and pure-Python backends.

    python3 benchmarks/bench_kernels.py [--T 2000] [--M 2 8] [--repeat 3]

Prints one row per (learner, M) with the best-of-``repeat`` time of each
backend, the speedup, and the largest decision difference between them.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from trackexp import kernels
from trackexp.learners import MIN_BIASED, VARIANCE, LearnerSpec
from trackexp.simplex import truncate_project


def _specs(M: int, T: int):
    return [
        LearnerSpec("uniform_mix", M, VARIANCE, horizon=T),
        LearnerSpec("uniform_mix", M, MIN_BIASED, horizon=T),
        LearnerSpec("truncated", M, MIN_BIASED, box_low=0.01, box_high=0.9),
        LearnerSpec("mapped", M, path_budget=3.0),
        LearnerSpec("doubling", M),
        LearnerSpec("utew", M),
    ]


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_learners(T: int, Ms, repeat: int) -> None:
    print(f"{'learner':<24}{'M':>4}{'python s':>12}{'compiled s':>12}{'speedup':>10}{'max diff':>11}")
    for M in Ms:
        L = np.random.default_rng(M).uniform(-1, 1, size=(T, M))
        for spec in _specs(M, T):
            name = spec.kind + ("" if spec.kind != "uniform_mix" else f"/{spec.rate_mode[:3]}")
            py = _best(lambda: kernels.run_trajectory(spec, L, backend="python"), repeat)
            co = _best(lambda: kernels.run_trajectory(spec, L, backend="compiled"), repeat)
            diff = np.abs(kernels.run_trajectory(spec, L, backend="python").decisions
                          - kernels.run_trajectory(spec, L, backend="compiled").decisions).max()
            print(f"{name:<24}{M:>4}{py:>12.4f}{co:>12.4f}{py / co:>10.1f}{diff:>11.1e}")


def bench_truncation(n: int, repeat: int) -> None:
    from trackexp import _kernels

    rng = np.random.default_rng(0)
    rows = [rng.dirichlet(np.ones(16)) for _ in range(n)]
    py = _best(lambda: [truncate_project(q, 0.01, 0.2).sigma for q in rows], repeat)
    co = _best(lambda: [_kernels.truncation_sigma(q, 0.01, 0.2) for q in rows], repeat)
    print(f"\ntruncation sigma, {n} calls at M=16: python {py:.4f}s, compiled {co:.4f}s, "
          f"speedup {py / co:.1f}")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=2000)
    ap.add_argument("--M", type=int, nargs="+", default=[2, 8])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "compiled":
        raise SystemExit("compiled extension not available; build with pip install -e .")
    print(f"T={args.T}, best of {args.repeat}\n")
    bench_learners(args.T, args.M, args.repeat)
    bench_truncation(10_000, args.repeat)


if __name__ == "__main__":
    main()
