"""Benchmark the compiled density-evolution kernel against the numpy fallback.

Usage: python3 benchmarks/bench_fp.py [--cells N ...] [--steps K] [--repeats R]
"""

import argparse
import time

import numpy as np

from mirrorlangevin import _fpfallback
from mirrorlangevin import fokker_planck as fp


def _problem(cells, seed=0):
    rng = np.random.default_rng(seed)
    p = rng.random(cells) + 0.5
    p /= p.sum()
    m = p * (1.0 + 0.2 * np.sin(np.linspace(0.0, 6.0, cells)))
    m /= m.sum()
    c = np.full(cells - 1, 0.05)
    return m, p, c


def _time(kernel, cells, steps, repeats):
    best = float("inf")
    for _ in range(repeats):
        m, p, c = _problem(cells)
        t0 = time.perf_counter()
        kernel.evolve_steps(m, p, c, steps)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cells", type=int, nargs="+", default=[128, 512, 2048])
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not fp.USING_COMPILED_KERNEL:
        print("compiled kernel not available; benchmarking fallback only")

    header = f"{'cells':>7} {'steps':>7} {'numpy (s)':>11}"
    if fp.USING_COMPILED_KERNEL:
        header += f" {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    for cells in args.cells:
        t_py = _time(_fpfallback, cells, args.steps, args.repeats)
        line = f"{cells:>7} {args.steps:>7} {t_py:>11.4f}"
        if fp.USING_COMPILED_KERNEL:
            from mirrorlangevin import _fpcore

            t_c = _time(_fpcore, cells, args.steps, args.repeats)
            line += f" {t_c:>13.4f} {t_py / t_c:>8.2f}"
        print(line)


if __name__ == "__main__":
    main()
