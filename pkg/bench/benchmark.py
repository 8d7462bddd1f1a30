"""Compare the compiled and numpy Monte Carlo kernels.

    python bench/benchmark.py [--trials 20000] [--repeat 3] [--threads 1]
"""

import argparse
import time

import numpy as np

from stealth_grid_lab import _backend
from stealth_grid_lab.rng import stream_key


def factors(m, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, m))
    S = A @ A.T + m * np.eye(m)
    return np.linalg.cholesky(S), np.linalg.cholesky(S + np.diag(rng.uniform(0, 3, m)))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--sizes", type=int, nargs="+", default=[3, 30, 71, 150])
    args = parser.parse_args()

    backends = ["python"]
    try:
        _backend.get("cython")
        backends.insert(0, "cython")
    except ValueError:
        print("compiled kernels unavailable; timing the numpy fallback only")

    key = stream_key(0)
    print(f"trials={args.trials} threads={args.threads} (best of {args.repeat})")
    print(f"{'m':>5} " + " ".join(f"{b:>10}" for b in backends) + ("    speedup" if len(backends) == 2 else ""))
    for m in args.sizes:
        L0, L1 = factors(m)
        secs = []
        for name in backends:
            kernels = _backend.get(name)
            secs.append(
                best_of(lambda: kernels.half_quadratic_gap(key, 0, args.trials, L0, L1, args.threads), args.repeat)
            )
        line = f"{m:>5} " + " ".join(f"{s:>9.3f}s" for s in secs)
        if len(secs) == 2:
            line += f"  {secs[1] / secs[0]:>8.2f}x"
        print(line)


if __name__ == "__main__":
    main()
