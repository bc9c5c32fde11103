"""Numba vs pure-numpy timings for the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--cutoff 60]

Both backends are called explicitly (``use_numba=True/False``), so the
FRIEDLANDER_PURE_NUMPY flag does not matter here. The first numba call is
timed separately as compile (or cache-load) time.
"""

import argparse
import math
import time

import numpy as np

from friedlander import _airy, _lattice, trace
from friedlander.special_fn import zero_table


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_airy(n, repeat):
    x = np.linspace(-200.0, 60.0, n)
    t0 = time.perf_counter()
    _airy.airy_arrays(x[:8], use_numba=True)
    warm = time.perf_counter() - t0
    tn = best_of(lambda: _airy.airy_arrays(x, use_numba=True), repeat)
    tp = best_of(lambda: _airy.airy_arrays(x, use_numba=False), repeat)
    a = _airy.airy_arrays(x, use_numba=True)
    b = _airy.airy_arrays(x, use_numba=False)
    diff = max(np.max(np.abs(a[0] - b[0])), np.max(np.abs(a[1] - b[1])))
    return warm, tn, tp, diff


def bench_moments(cutoff, repeat):
    zeros = zero_table(trace.CERTIFIED_ZEROS)
    req = trace.TraceRequest(np.array([5.0]), cutoff)
    cut = req.energy_cut
    hb = 0.5 / 7.0

    def run(use_numba):
        return _lattice.binned_moments(_lattice.PHASE_FRIEDLANDER, zeros.zeros, cut, cutoff, True, 0,
                                       0.25, 4.0, 0.75, hb, use_numba=use_numba)

    t0 = time.perf_counter()
    run(True)
    warm = time.perf_counter() - t0
    tn = best_of(lambda: run(True), repeat)
    tp = best_of(lambda: run(False), repeat)
    (mn, count), (mp, _) = run(True), run(False)
    diff = float(np.max(np.abs(mn - mp)) / np.max(np.abs(mp)))
    return warm, tn, tp, diff, count


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=200_000, help="Airy evaluation points")
    ap.add_argument("--cutoff", type=float, default=60.0, help="trace frequency cutoff")
    args = ap.parse_args()

    warm, tn, tp, diff = bench_airy(args.points, args.repeat)
    print(f"airy_arrays   n={args.points:<9d} numba {tn * 1e3:9.2f} ms   numpy {tp * 1e3:9.2f} ms   "
          f"speedup {tp / tn:6.1f}x   first call {warm:.2f} s   max |diff| {diff:.1e}")
    warm, tn, tp, diff, count = bench_moments(args.cutoff, args.repeat)
    print(f"bin moments   points={count:<9d} numba {tn * 1e3:9.2f} ms   numpy {tp * 1e3:9.2f} ms   "
          f"speedup {tp / tn:6.1f}x   first call {warm:.2f} s   rel diff {diff:.1e}")


if __name__ == "__main__":
    main()
