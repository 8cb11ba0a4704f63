#!/usr/bin/env python3
"""Benchmark the compiled detector kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--frames N] [--window W] [--repeats R]
"""

import argparse
import time

import numpy as np

from demokit import kernels


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=200_000)
    parser.add_argument("--window", type=int, default=9)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    # wandering path with tremor-scale jitter, like a long recording session
    pts = np.cumsum(rng.normal(scale=0.002, size=(args.frames, 3)), axis=0)
    pts = np.ascontiguousarray(pts)

    impls = kernels.implementations()
    print(f"active backend: {kernels.BACKEND}")
    print(f"{args.frames} frames, window {args.window}, best of {args.repeats}\n")
    print(f"{'backend':10s} {'turning_angles':>16s} {'density_scores':>16s}")
    times = {}
    for name, impl in impls.items():
        t_angle = _time(lambda: impl.turning_angles(pts, args.window), args.repeats)
        t_dens = _time(lambda: impl.density_scores(pts, args.window), args.repeats)
        times[name] = (t_angle, t_dens)
        print(f"{name:10s} {t_angle * 1e3:13.1f} ms {t_dens * 1e3:13.1f} ms")
    if "compiled" in times and "python" in times:
        sa = times["python"][0] / times["compiled"][0]
        sd = times["python"][1] / times["compiled"][1]
        print(f"\nspeedup (compiled vs python): angles x{sa:.1f}, density x{sd:.1f}")
    else:
        print("\ncompiled extension not built; only the fallback was measured")

    # cross-check outputs while both implementations are loaded
    if len(impls) == 2:
        t_py, d_py = impls["python"].turning_angles(pts[:5000], args.window)
        t_c, d_c = impls["compiled"].turning_angles(pts[:5000], args.window)
        s_py = impls["python"].density_scores(pts[:5000], args.window)
        s_c = impls["compiled"].density_scores(pts[:5000], args.window)
        assert np.allclose(t_py, t_c, atol=1e-12) and (d_py == d_c).all()
        assert np.allclose(s_py, s_c, rtol=1e-12)
        print("outputs agree across backends")


if __name__ == "__main__":
    main()
