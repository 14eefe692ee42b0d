"""Benchmark the compiled kernels against the pure-Python references.

    python benchmarks/bench_kernels.py [--size 128] [--repeats 3]

Covers the three hot kernels in isolation plus one full segmentation per
backend, and verifies along the way that both backends produce identical
output on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from geoseg.distance import build_distance_bundle
from geoseg.evaluation import generate_synthetic
from geoseg.grid import normalize
from geoseg.kernels import pyref
from geoseg.solver import SolverParams, segment

try:
    from geoseg.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_kernels(size, repeats):
    rng = np.random.default_rng(0)
    cost = rng.uniform(0.05, 2.0, (size, size))
    seeds_i = np.array([size // 2], dtype=np.int64)
    seeds_j = np.array([size // 2], dtype=np.int64)

    u0 = rng.random((size, size))
    coeff = [rng.random((size, size)) for _ in range(4)]
    coeff[0][:, -1] = 0
    coeff[1][:, 0] = 0
    coeff[2][0, :] = 0
    coeff[3][-1, :] = 0

    lower = rng.normal(size=(size, size - 1))
    upper = rng.normal(size=(size, size - 1))
    diag = 4.0 + rng.random((size, size))
    rhs = rng.normal(size=(size, size))

    rows = []
    cases = [
        ("fast_march", lambda k: k.fast_march(cost, seeds_i, seeds_j, 1.0, 1.0)),
        ("gauss_seidel x100", lambda k: k.gauss_seidel_sweeps(
            u0, u0, *coeff, 5e-4, 100)),
        ("tridiag batch", lambda k: k.solve_tridiagonal_batched(
            lower, diag, upper, rhs)),
    ]
    for name, call in cases:
        t_py, out_py = timeit(lambda: call(pyref), repeats)
        if _native is not None:
            t_nat, out_nat = timeit(lambda: call(_native), repeats)
            assert np.array_equal(out_py, out_nat), f"{name}: backend mismatch"
            rows.append((name, t_py, t_nat))
        else:
            rows.append((name, t_py, None))
    return rows


SEGMENT_SNIPPET = """
import time
from geoseg.distance import build_distance_bundle
from geoseg.evaluation import generate_synthetic
from geoseg.grid import normalize
from geoseg.kernels import BACKEND
from geoseg.solver import SolverParams, segment

image, _, ms = generate_synthetic("circle_among_shapes", {size})
z = normalize(image)
params = SolverParams(lambda1=2, lambda2=2, theta=2)
best = float("inf")
for _ in range({repeats}):
    start = time.perf_counter()
    bundle = build_distance_bundle(z, ms)
    res = segment(z, ms, bundle, params)
    best = min(best, time.perf_counter() - start)
print(f"{{BACKEND}} {{best:.4f}} {{res.iterations}}")
"""


def bench_segment(size, repeats):
    """Each backend runs in its own interpreter via GEOSEG_BACKEND."""
    import os
    import subprocess
    import sys

    results = []
    backends = ["python"] + (["native"] if _native else [])
    for name in backends:
        env = dict(os.environ)
        if name == "python":
            env["GEOSEG_BACKEND"] = "python"
        else:
            env.pop("GEOSEG_BACKEND", None)
        out = subprocess.run(
            [sys.executable, "-c", SEGMENT_SNIPPET.format(size=size, repeats=repeats)],
            env=env, capture_output=True, text=True, check=True)
        backend, seconds, iters = out.stdout.split()
        assert backend == name, f"expected backend {name}, got {backend}"
        results.append((name, float(seconds), int(iters)))
    return results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if _native is None:
        print("note: compiled extension not available, timing pure Python only")

    print(f"kernel benchmarks ({args.size}x{args.size}, best of {args.repeats})")
    print(f"{'kernel':<20} {'python':>10} {'native':>10} {'speedup':>9}")
    for name, t_py, t_nat in bench_kernels(args.size, args.repeats):
        if t_nat is None:
            print(f"{name:<20} {t_py * 1e3:>8.1f}ms {'-':>10} {'-':>9}")
        else:
            print(f"{name:<20} {t_py * 1e3:>8.1f}ms {t_nat * 1e3:>8.1f}ms "
                  f"{t_py / t_nat:>8.1f}x")

    print("\nfull pipeline (distance bundle + segmentation)")
    for name, t, iters in bench_segment(args.size, max(1, args.repeats - 1)):
        print(f"{name:<20} {t:>8.2f}s  ({iters} iterations)")


if __name__ == "__main__":
    main()
