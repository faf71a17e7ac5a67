"""Numba vs pure-numpy timing for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--points 4096]

Both code paths are called directly from ``discrete_dirac._kernels`` so a
single run compares them regardless of ``DISCRETE_DIRAC_DISABLE_NUMBA``.
The first numba call (compilation or cache load) is timed separately.
"""
import argparse
import time

import numpy as np

from discrete_dirac import _kernels
from discrete_dirac.dispersion import g
from discrete_dirac.free import QuadratureSpec
from discrete_dirac.jost import boundary_vectors
from discrete_dirac.potentials import seeded_random


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def jost_case(points, half_width, sites):
    m = 1.0
    Q = seeded_random(7, half_width)
    theta = np.linspace(-np.pi + 1e-3, np.pi - 1e-3, points).astype(complex)
    lam = g(theta, m).astype(complex)
    b = boundary_vectors(theta, lam, m, 1, "plain")
    q = Q.entries
    s_lo = Q.window.n_min
    lo, hi = -sites, sites
    z = np.exp(-1j * theta)
    args = (z, lam, b, m, q, s_lo, lo, hi)
    return (lambda: _kernels.jost_plus_numpy(*args)), (lambda: _kernels.jost_plus_numba(*args))


def free_case(t, emax):
    nodes, weights = QuadratureSpec().rule(t, emax)
    args = (nodes, weights, t, 1.0, emax)
    return (lambda: _kernels.free_sums_numpy(*args)), (lambda: _kernels.free_sums_numba(*args))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=4096)
    args = ap.parse_args()
    if _kernels.jost_plus_numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    cases = [
        (f"jost_plus  P={args.points} support=41 sites=201", *jost_case(args.points, 20, 100)),
        (f"jost_plus  P={args.points // 4} support=201 sites=401", *jost_case(args.points // 4, 100, 200)),
        ("free_sums  t=100 emax=200", *free_case(100.0, 200)),
        ("free_sums  t=400 emax=400", *free_case(400.0, 400)),
    ]
    print(f"{'case':44s} {'numpy [s]':>10s} {'numba [s]':>10s} {'first [s]':>10s} {'speedup':>8s} {'rel diff':>10s}")
    for name, np_fn, nb_fn in cases:
        t0 = time.perf_counter()
        nb_fn()
        first = time.perf_counter() - t0
        t_np, r_np = best_of(np_fn, args.repeat)
        t_nb, r_nb = best_of(nb_fn, args.repeat)
        pairs = zip(r_np, r_nb) if isinstance(r_np, tuple) else [(r_np, r_nb)]
        # relative: Jost data across a long random potential span many decades
        diff = max(float(np.max(np.abs(a - b)) / np.max(np.abs(a))) for a, b in pairs)
        print(f"{name:44s} {t_np:10.4f} {t_nb:10.4f} {first:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
