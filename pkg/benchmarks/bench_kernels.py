"""Benchmark the jit kernels against the pure-numpy fallback.

Run twice to compare the paths:

    python benchmarks/bench_kernels.py            # numba (default)
    ENTK_NUMBA=0 python benchmarks/bench_kernels.py

Each workload is a realistic slice of the pipeline: point classification
over a map raster, anchor visibility, pairwise sample visibility, and the
safe-reach dilation.
"""

import time

import numpy as np

from tetherkit import _kernels
from tetherkit.geometry import Polygon, pack_obstacles

OBSTACLES = [
    Polygon([(4, 4), (6, 4), (6, 6), (4, 6)]),
    Polygon([(1, 7), (2.5, 7.2), (2.2, 8.6), (1.1, 8.4)]),
    Polygon([(7, 1), (8.5, 1.4), (8.2, 2.8), (6.8, 2.4)]),
]
RINGS = pack_obstacles(OBSTACLES)
TOL = 1e-9


def bench_point_classes():
    xs = np.linspace(0.05, 9.95, 300)
    gx, gy = np.meshgrid(xs, xs)
    gx = np.ascontiguousarray(gx.ravel())
    gy = np.ascontiguousarray(gy.ravel())
    return lambda: _kernels.point_classes(gx, gy, RINGS, TOL)

def bench_visibility_from():
    xs = np.linspace(0.05, 9.95, 220)
    gx, gy = np.meshgrid(xs, xs)
    gx = np.ascontiguousarray(gx.ravel())
    gy = np.ascontiguousarray(gy.ravel())
    return lambda: _kernels.visibility_from(0.5, 0.5, gx, gy, RINGS, TOL)

def bench_pairwise():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.2, 9.8, size=(260, 2))
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    return lambda: _kernels.pairwise_visibility(xs, ys, RINGS, TOL)

def bench_dilation():
    rng = np.random.default_rng(1)
    t = rng.uniform(0.2, 9.8, size=(4000, 2))
    s = rng.uniform(0.2, 9.8, size=(1500, 2))
    args = tuple(np.ascontiguousarray(a) for a in (t[:, 0], t[:, 1], s[:, 0], s[:, 1]))
    return lambda: _kernels.reach_dilation(*args, 2.0, RINGS, TOL)

def bench_word_check():
    return lambda: _kernels.word_reduction_check(7, 3)


def main():
    mode = "numba" if _kernels.NUMBA_ENABLED else "numpy fallback"
    print(f"kernel path: {mode}")
    for label, maker in [
        ("point_classes 90k points", bench_point_classes),
        ("visibility_from 48k targets", bench_visibility_from),
        ("pairwise_visibility 260 samples", bench_pairwise),
        ("reach_dilation 4k x 1.5k", bench_dilation),
        ("word_reduction_check len<=7", bench_word_check),
    ]:
        func = maker()
        func()  # warm up / compile outside the timing
        times = []
        for _ in range(3):
            t0 = time.perf_counter()
            func()
            times.append(time.perf_counter() - t0)
        print(f"{label:36s} {min(times) * 1000:9.2f} ms")


if __name__ == "__main__":
    main()
