"""Compare the numba and numpy kernels of one training step.

    python benchmarks/bench_kernels.py [--reps 500] [--m 5000]

Prints microseconds per call for the forward pass (activation, derivative and
batch second moment) and for the gradient contraction, per activation and
output dimension, plus the max absolute disagreement between backends.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from onelayer_gan import kernels
from onelayer_gan.model import get_activation


def _time(fn, reps):
    fn()  # warm-up (and JIT compile)
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best * 1e6


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--m", type=int, default=5000)
    ap.add_argument("--dims", default="2,3,7")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 0

    rng = np.random.default_rng(0)
    print(f"{'activation':<12}{'d':>3}{'k':>3}  {'fwd numba':>10}{'fwd numpy':>10}"
          f"{'grad numba':>11}{'grad numpy':>11}{'max diff':>10}")
    for kind in ("tanh", "sigmoid", "relu", "leaky_relu"):
        act = get_activation(kind)
        for d in (int(x) for x in args.dims.split(",")):
            k = 2 if d > 2 else d
            A = rng.standard_normal((d, k))
            Z = rng.standard_normal((k, args.m))
            R = rng.standard_normal((d, d))
            R = R + R.T
            row = {}
            outs = {}
            for be in ("numba", "numpy"):
                with kernels.use_backend(be):
                    Y, D1, S = kernels.forward_stats(A, Z, act.code, act.leak)
                    outs[be] = (Y, D1, S, kernels.grad_from_residual(Y, D1, Z, R))
                    row[be, "fwd"] = _time(lambda: kernels.forward_stats(A, Z, act.code, act.leak), args.reps)
                    row[be, "grad"] = _time(lambda: kernels.grad_from_residual(Y, D1, Z, R), args.reps)
            diff = max(float(np.max(np.abs(a - b))) for a, b in zip(outs["numba"], outs["numpy"]))
            print(f"{kind:<12}{d:>3}{k:>3}  {row['numba', 'fwd']:>10.1f}{row['numpy', 'fwd']:>10.1f}"
                  f"{row['numba', 'grad']:>11.1f}{row['numpy', 'grad']:>11.1f}{diff:>10.1e}")
    print("times in microseconds per call (best of 3)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
