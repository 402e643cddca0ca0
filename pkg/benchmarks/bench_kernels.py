"""Compare the numba kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--dims 100,400,1600] [--repeats 200]

Kernel timings are taken in-process (both implementations are importable
side by side). The end-to-end row runs a small GNM batch in a subprocess per
backend so that the environment flag decides the active path.
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from spherenewton import _kernels
from spherenewton.instances import generate_instance, random_start


def best_of(fn, repeats):
    timer = timeit.Timer(fn)
    number = max(1, repeats // 5)
    return min(timer.repeat(repeat=5, number=number)) / number


def kernel_rows(n, repeats):
    inst = generate_instance(n, 0.003, 1)
    A = inst.A
    args = (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data)
    p = random_start(n, 2)
    rows = []
    for name, impl in (("numba", _kernels.loop_impl), ("numpy", _kernels.numpy_impl)):
        X, F = impl.avvf_residual(*args, inst.b, p)
        impl.avvf_clarke(*args, p, F)
        t_res = best_of(lambda: impl.avvf_residual(*args, inst.b, p), repeats)
        t_cl = best_of(lambda: impl.avvf_clarke(*args, p, F), max(1, repeats // 10))
        rows.append((n, name, t_res, t_cl))
    return rows


def rotation_rows(n):
    rng = np.random.default_rng(0)
    chunk = 20 * n
    first = rng.integers(0, n, size=chunk)
    second = rng.integers(0, n - 1, size=chunk)
    second += second >= first
    pairs = np.ascontiguousarray(np.stack([first, second], axis=1), dtype=np.int64)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=chunk)
    rows = []
    for name, impl in (("numba", _kernels.loop_impl), ("numpy", _kernels.numpy_impl)):
        impl.rotate_until_density(np.eye(n), n, float(n * n), pairs[:4], angles[:4], 0)
        t0 = time.perf_counter()
        impl.rotate_until_density(np.eye(n), n, float(n * n), pairs, angles, 0)
        rows.append((n, name, time.perf_counter() - t0))
    return rows


def end_to_end(dims, instances):
    out = {}
    for name, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, SPHERENEWTON_DISABLE_NUMBA=flag)
        cmd = [sys.executable, "-m", "spherenewton", "bench", "--dims", dims, "--instances",
               str(instances), "--M", "0", "--no-timing", "--out-csv", os.devnull,
               "--out-jsonl", os.devnull]
        subprocess.run(cmd, env=env, capture_output=True, check=True)  # warm the JIT cache
        t0 = time.perf_counter()
        subprocess.run(cmd, env=env, capture_output=True, check=True)
        out[name] = time.perf_counter() - t0
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="100,400,1600")
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--e2e-dims", default="100,200")
    ap.add_argument("--e2e-instances", type=int, default=20)
    args = ap.parse_args(argv)
    if _kernels.BACKEND != "numba":
        print("numba is disabled in this process; kernel rows compare two numpy paths")
    dims = [int(d) for d in args.dims.split(",")]

    print(f"{'n':>6} {'backend':>7} {'residual_us':>12} {'clarke_us':>10}")
    for n in dims:
        for n_, name, t_res, t_cl in kernel_rows(n, args.repeats):
            print(f"{n_:>6} {name:>7} {1e6 * t_res:>12.1f} {1e6 * t_cl:>10.1f}")
    print(f"\n{'n':>6} {'backend':>7} {'rotations_ms':>12}")
    for n in dims:
        for n_, name, t in rotation_rows(n):
            print(f"{n_:>6} {name:>7} {1e3 * t:>12.2f}")
    e2e = end_to_end(args.e2e_dims, args.e2e_instances)
    print(f"\nGNM(M=0) batch, dims {args.e2e_dims}, {args.e2e_instances} instances each "
          "(process wall time, includes import)")
    for name, t in e2e.items():
        print(f"{name:>7} {t:8.2f} s")


if __name__ == "__main__":
    main()
