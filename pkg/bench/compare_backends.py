"""Time the compiled ECDSep loop against the pure-Python fallback.

Both paths run the same trajectory (same seed, same hyperparameters); the
script checks that they agree and reports steps per second.

    python3 bench/compare_backends.py --steps 20000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ecdsep import BACKEND, EcdHyperParams, RngStream, run
from ecdsep.benchmarks import AckleyRegularized, QuadraticBasin, Zakharov

PROBLEMS = {
    "quadratic-n4": (QuadraticBasin(4, 1.0, 1.0), np.ones(4), EcdHyperParams(eta=1, dt=0.1, nu=0.1, delta_e=20.0)),
    "zakharov-n10": (Zakharov(10), np.ones(10), EcdHyperParams(eta=1.2, dt=1.0, nu=1e-4, delta_e=1.0,
                                                               eps2=0.0)),
    "ackley": (AckleyRegularized(), np.array([-4.0, 3.0]), EcdHyperParams(eta=2.0, dt=0.05, nu=1e-3)),
}


def timed(obj, theta0, hp, steps, use_kernel, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        state, log = run(obj, theta0, hp, steps, RngStream(0), use_kernel=use_kernel)
        best = min(best, time.perf_counter() - t0)
    return best, state, log


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    if BACKEND != "cython":
        print("compiled kernel unavailable; only the Python path can be timed")
    print(f"{'problem':<14} {'steps':>8} {'python s':>10} {'kernel s':>10} {'speedup':>8} {'max rel diff':>11}")
    for name, (obj, theta0, hp) in PROBLEMS.items():
        t_py, s_py, log_py = timed(obj, theta0, hp, args.steps, False, 1)
        if BACKEND != "cython":
            print(f"{name:<14} {s_py.step:>8} {t_py:>10.3f}")
            continue
        t_k, s_k, log_k = timed(obj, theta0, hp, args.steps, True, args.repeats)
        n = min(len(log_py), len(log_k))
        a, b = log_py.data[:n, 1:], log_k.data[:n, 1:]
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0))) if n else float("nan")
        print(f"{name:<14} {s_k.step:>8} {t_py:>10.3f} {t_k:>10.4f} {t_py / t_k:>7.0f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
