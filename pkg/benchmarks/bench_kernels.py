"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--e2e]

Both paths are importable side by side, so one process measures both.
``--e2e`` additionally times zero localisation plus tail recovery in two
subprocesses, one with ``SINETYPE_DISABLE_NUMBA=1``.
"""

import argparse
import math
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from sinetype import _kernels as K

E2E = """
import math, time
import numpy as np
from sinetype import FourierTail, MainPart, SineTypeBase, ThetaFunction, localize_zeros
from sinetype.reconstruction import recover_tail
rng = np.random.default_rng(0)
c = 0.05 * (rng.normal(size=33) + 1j * rng.normal(size=33))
theta = ThetaFunction(MainPart(SineTypeBase.sin_scaled(math.pi), [0, 1]), FourierTail(math.pi, c))
localize_zeros(theta, 50)
t = time.perf_counter()
zs = localize_zeros(theta, 2000).zeros
recover_tail(zs.upto(400), theta.main, 32)
print(time.perf_counter() - t)
"""


def cases(rng):
    b = math.pi
    ks = np.arange(-32, 33)
    coeffs = rng.normal(size=65) + 1j * rng.normal(size=65)
    z = rng.uniform(-200, 200, 20000) + 1j * rng.uniform(-3, 3, 20000)
    nodes = np.arange(1, 513) * 0.5 + 0.01j
    nus = np.zeros(nodes.size, dtype=np.int64)
    lat = np.arange(-2000, 2001).astype(np.complex128)
    zeros = lat + 0.01 / np.maximum(1, np.abs(lat))
    mu = np.where(lat != 0, lat, -1.0)
    pts = rng.uniform(-5, 5, 500) + 0.3j
    return [
        ("tail_eval 20000 pts x 65 modes", K.tail_eval_numba, K.tail_eval_numpy,
         (z, ks, coeffs, b, 0)),
        ("tail_eval nu=1", K.tail_eval_numba, K.tail_eval_numpy, (z, ks, coeffs, b, 1)),
        ("moment_matrix 512 x 65", K.moment_matrix_numba, K.moment_matrix_numpy,
         (nodes, nus, ks, b)),
        ("log_ratio_sum 500 pts x 4001 zeros", K.log_ratio_sum_numba, K.log_ratio_sum_numpy,
         (pts, zeros, lat)),
        ("log_hadamard_sum 500 pts x 4001 zeros", K.log_hadamard_sum_numba, K.log_hadamard_sum_numpy,
         (pts, zeros, mu)),
    ]


def best(fn, args, repeat):
    fn(*args)  # compile / warm caches
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--e2e", action="store_true")
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        print("numba is not installed; only the numpy path exists")
        return 1
    rng = np.random.default_rng(1)
    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, fast, slow, a in cases(rng):
        diff = np.max(np.abs(fast(*a) - slow(*a)) / np.maximum(1.0, np.abs(slow(*a))))
        tf, ts = best(fast, a, args.repeat), best(slow, a, args.repeat)
        print(f"{name:40s} {tf * 1e3:11.2f} {ts * 1e3:11.2f} {ts / tf:8.2f} {diff:9.1e}")
    if args.e2e:
        for label, flag in (("numba", "0"), ("numpy", "1")):
            env = dict(os.environ, SINETYPE_DISABLE_NUMBA=flag)
            t0 = time.perf_counter()
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True,
                                 check=True)
            print(f"end-to-end localize(2000) + recover [{label}]: {float(out.stdout):.3f} s "
                  f"(process {time.perf_counter() - t0:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
