#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from subwave._kernels import _pykernels

try:
    from subwave._kernels import _ckernels
except ImportError:
    _ckernels = None

X_DIPOLE = np.array([1.0, 0.0, 0.0], dtype=complex)


def timeit(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_coupling(n):
    rng = np.random.default_rng(0)
    pos = rng.uniform(-3, 3, (n, 3))
    return {
        "python": timeit(lambda: _pykernels.coupling_matrices(pos, X_DIPOLE)),
        "compiled": timeit(lambda: _ckernels.coupling_matrices(pos, X_DIPOLE))
        if _ckernels else None,
    }


def bench_field(p, n):
    rng = np.random.default_rng(1)
    pos = rng.uniform(-3, 3, (n, 3))
    pts = rng.uniform(-2, 2, (p, 3)) + np.array([0, 0, 6.0])
    return {
        "python": timeit(lambda: _pykernels.field_coupling_matrix(pts, pos, X_DIPOLE, X_DIPOLE)),
        "compiled": timeit(lambda: _ckernels.field_coupling_matrix(pts, pos, X_DIPOLE, X_DIPOLE))
        if _ckernels else None,
    }


def bench_lattice(a, r_max):
    eps = 0.04 * 2.0 ** np.arange(6)[::-1]
    args = (a, np.pi / a, np.pi / a, X_DIPOLE, eps, r_max, 0.25)
    return {
        "python": timeit(lambda: _pykernels.lattice_mode_sums(*args), repeats=2),
        "compiled": timeit(lambda: _ckernels.lattice_mode_sums(*args), repeats=2)
        if _ckernels else None,
    }


def report(name, res):
    py = res["python"]
    cy = res["compiled"]
    if cy is None:
        print(f"{name:<42s} python {py * 1e3:9.2f} ms   compiled: unavailable")
    else:
        print(f"{name:<42s} python {py * 1e3:9.2f} ms   compiled {cy * 1e3:9.2f} ms"
              f"   speedup {py / cy:6.1f}x")


def main():
    print("kernel benchmark (best of repeats)")
    print("-" * 100)
    for n in (100, 400):
        report(f"coupling_matrices      N={n}", bench_coupling(n))
    report("field_coupling_matrix  P=31 N=400", bench_field(31, 400))
    for a, r_max in ((0.5, 220.0), (0.2, 220.0), (0.55, 400.0)):
        report(f"lattice_mode_sums      a={a} r_max={r_max}", bench_lattice(a, r_max))


if __name__ == "__main__":
    main()
