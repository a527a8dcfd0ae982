#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times each hot kernel at the default problem size (n = 4096 steps,
64 x 16 x 32 k-grid) and prints per-call wall times plus the speedup.

    python benchmarks/compare_backends.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

import filament_mc as fm
from filament_mc._backend import get_kernels


def timed(fn, repeat):
    fn()   # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        compiled = get_kernels("compiled")
    except ImportError:
        print("compiled backend not available; build with: pip install -e . --no-build-isolation")
        return 1
    fallback = get_kernels("python")

    cs = fm.CrossSection.gaussian(0.5)
    kg = fm.build_kgrid(cs)
    path = fm.sample_bm(fm.TimeGrid(1.0, args.steps), np.zeros(3), fm.SeedSpec(7, 0))
    ev = path.midpoints
    deltas = np.ascontiguousarray(path.increments)
    dots = np.ascontiguousarray((ev @ kg.directions[kg.half_index].T).T)
    qs = np.ascontiguousarray(kg.q)

    r_tab = np.linspace(0.0, 8.0, 8192)
    g_tab = np.ascontiguousarray(np.interp(r_tab, r_tab, 1.0 / (4 * np.pi * np.maximum(r_tab, 0.2))))
    rho2_tab = np.ascontiguousarray(np.exp(-r_tab**2))
    pts = np.ascontiguousarray(path.points)

    n_cross = min(args.steps, 2048)
    px = pts[:n_cross]
    py = np.ascontiguousarray(pts[:n_cross] + np.array([1.0, 0.0, 0.0]))
    dl = deltas[:n_cross]

    radii = np.ascontiguousarray(np.linalg.norm(pts[:-1], axis=1) + 1e-9)
    wedge = np.ascontiguousarray(np.cross(pts[:-1], deltas) / radii[:, None])

    cases = [
        ("transform_sums (filament transform)",
         lambda k: k.transform_sums(dots, qs, deltas)),
        ("pair_sums (kernel-space H~)",
         lambda k: k.pair_sums(pts, deltas, r_tab, g_tab, rho2_tab)),
        ("pair_sums_b (kernel-space H)",
         lambda k: k.pair_sums_b(pts, deltas, r_tab, g_tab, rho2_tab)),
        ("cross_pair_sums (point-like interaction)",
         lambda k: k.cross_pair_sums(px, dl, py, dl, 1.0 / n_cross, 0.02, 1e-12)),
        ("area_sums (stochastic-area bound)",
         lambda k: k.area_sums(radii, wedge, qs)),
    ]

    print(f"steps = {args.steps}, k-grid = {kg.n_radial} x {kg.n_angular}, "
          f"repeat = {args.repeat}\n")
    print(f"{'kernel':44s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, call in cases:
        tc = timed(lambda: call(compiled), args.repeat)
        tp = timed(lambda: call(fallback), max(1, args.repeat // 3))
        print(f"{name:44s} {tc * 1e3:9.1f}ms {tp * 1e3:9.1f}ms {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
