"""Timing comparison: compiled shell kernels against the NumPy backend.

Workload shapes follow the real call sites: contour quadrature (one x,
many y), handle-path quadrature (many x, fixed pair) and quasiform fits.

    python3 benchmarks/bench_kernels.py [--lengths 6 8] [--points 64 256]
"""

import argparse
import time

import numpy as np

from schottkyvir import _kernels_py
from schottkyvir.differentials import reference_params
from schottkyvir.schottky import group_matrix_stack

try:
    from schottkyvir import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(L: int, npts: int):
    params = reference_params()
    mats, off = group_matrix_stack(params, L)
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(6.0 * np.exp(2j * np.pi * rng.uniform(size=npts)))
    y = np.ascontiguousarray(5.0 * np.exp(2j * np.pi * rng.uniform(size=npts)))
    y0 = np.full_like(x, 12.0j)
    A = np.array([-3.0099, -0.9900, 0.9900], dtype=complex)
    return [
        ("omega", lambda k: k.omega_partials(mats, off, x, y)),
        ("omega_2", lambda k: k.omega_n_partials(mats, off, x, y, 2)),
        ("proj_conn", lambda k: k.proj_conn_partials(mats, off, x)),
        ("cauchy_pair", lambda k: k.cauchy_pair_partials(mats, off, x, y, y0)),
        ("psi_2", lambda k: k.psi_partials(mats, off, x, y, A, 2)),
    ], mats.shape[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lengths", type=int, nargs="+", default=[6, 8])
    ap.add_argument("--points", type=int, nargs="+", default=[64, 256])
    args = ap.parse_args()

    if compiled is None:
        print("compiled kernels missing; build with: pip install -e . --no-build-isolation")
    header = f"{'kernel':<12} {'L':>2} {'points':>6} {'group':>6} {'numpy':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for L in args.lengths:
        for npts in args.points:
            loads, n_group = workloads(L, npts)
            for name, call in loads:
                t_py = _time(call, _kernels_py)
                if compiled is not None:
                    t_cy = _time(call, compiled)
                    print(f"{name:<12} {L:>2} {npts:>6} {n_group:>6} "
                          f"{t_py*1e3:>8.2f}ms {t_cy*1e3:>8.2f}ms {t_py/t_cy:>7.1f}x")
                else:
                    print(f"{name:<12} {L:>2} {npts:>6} {n_group:>6} {t_py*1e3:>8.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
