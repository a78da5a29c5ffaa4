"""Benchmark the compiled SMO solver against the pure-numpy fallback.

Both backends are imported directly (bypassing the SADIAG_NO_EXT switch),
checked for bit-identical results on every problem, and timed on
precomputed-kernel duals of increasing size.

    python benchmarks/bench_smo.py [--sizes 64,128,256,512] [--trials 5]
"""

import argparse
import time

import numpy as np


def make_problem(rng, n):
    x = rng.normal(size=(n, 8)) + rng.integers(0, 2, size=(n, 1)) * 3.0
    kernel = x @ x.T
    kernel = (kernel + kernel.T) / 2.0
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0  # both classes present
    return np.ascontiguousarray(kernel), y


def time_solver(solve, kernel, y, c, trials):
    best = np.inf
    result = None
    for _ in range(trials):
        start = time.perf_counter()
        result = solve(kernel, y, c, 1e-6, 1_000_000)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="64,128,256,512",
                        help="comma-separated problem sizes")
    parser.add_argument("--trials", type=int, default=5,
                        help="timing repetitions per size (best is kept)")
    parser.add_argument("--c", type=float, default=1.0, help="box constraint")
    args = parser.parse_args()

    try:
        from sadiag._smo_cy import smo_solve as solve_compiled
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    from sadiag._smo_py import smo_solve as solve_python

    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'python':>12} {'compiled':>12} {'speedup':>9}  identical")
    for n in (int(s) for s in args.sizes.split(",")):
        kernel, y = make_problem(rng, n)
        t_py, r_py = time_solver(solve_python, kernel, y, args.c, args.trials)
        t_cy, r_cy = time_solver(solve_compiled, kernel, y, args.c, args.trials)
        identical = (np.array_equal(r_py[0], r_cy[0])
                     and np.array_equal(r_py[1], r_cy[1])
                     and r_py[2:] == r_cy[2:])
        print(f"{n:>6} {t_py * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms "
              f"{t_py / t_cy:>8.1f}x  {identical}")
        if not identical:
            raise SystemExit("backends disagree; the fallback is not faithful")
    print("backends produced bit-identical solutions on every problem")


if __name__ == "__main__":
    main()
