#!/usr/bin/env python3
"""Timing comparison of the compiled geometry kernels vs the fallback.

Imports both implementations directly (bypassing the backend selector),
checks they agree on shared random inputs, then reports per-call timing
and speedup for each kernel.  Run from the repo root:

    python3 benchmarks/bench_geokern.py [--size 256] [--repeat 5]
"""

import argparse
import time

import numpy as np

from radiodiff.geokern import BACKEND, _fallback


def _load_cython():
    try:
        from radiodiff.geokern import _kernels
    except ImportError:
        return None
    return _kernels


def _time(fn, args, repeat, inner):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def _bench_case(name, py_fn, cy_fn, args, check, repeat, inner):
    res_py = py_fn(*args)
    res_cy = cy_fn(*args)
    check(res_py, res_cy)
    t_py = _time(py_fn, args, repeat, inner)
    t_cy = _time(cy_fn, args, repeat, inner)
    print(f"{name:16s} python {t_py * 1e6:9.1f} us   cython {t_cy * 1e6:9.1f} us"
          f"   speedup {t_py / t_cy:6.1f}x")
    return t_py / t_cy


def _check_traverse(a, b):
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def _check_array(a, b):
    assert np.allclose(a, b, atol=1e-12)


def _check_scalar(a, b):
    assert a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=256, help="grid side length")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cy = _load_cython()
    if cy is None:
        print(f"compiled backend unavailable (active backend: {BACKEND}); "
              "nothing to compare")
        return 1

    n = args.size
    rng = np.random.default_rng(args.seed)
    occ = (rng.random((n, n)) < 0.15).astype(np.uint8)
    values = rng.random((n, n))
    r0, c0 = n / 2 + 0.25, n / 2 - 0.25
    occ[int(r0), int(c0)] = 0

    print(f"grid {n}x{n}, default backend: {BACKEND}")
    speedups = [
        _bench_case(
            "traverse_cells",
            _fallback.traverse_cells, cy.traverse_cells,
            (0.2, 0.7, n - 1.3, n - 2.6, n, n),
            _check_traverse, args.repeat, 200,
        ),
        _bench_case(
            "wall_crossings",
            _fallback.wall_crossings, cy.wall_crossings,
            (occ, r0, c0),
            _check_array, args.repeat, 3,
        ),
        _bench_case(
            "ray_volatility",
            _fallback.ray_volatility, cy.ray_volatility,
            (values, occ, r0, c0, 64, 0.05, 3.0),
            _check_scalar, args.repeat, 10,
        ),
        _bench_case(
            "ring_bilinear",
            _fallback.ring_bilinear, cy.ring_bilinear,
            (values, r0, c0, n / 4.0, 180),
            _check_array, args.repeat, 50,
        ),
    ]
    print(f"geometric-mean speedup {float(np.exp(np.mean(np.log(speedups)))):.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
