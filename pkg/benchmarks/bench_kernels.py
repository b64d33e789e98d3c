"""Compiled vs numpy kernels: Bohr masks and bump-train evaluation.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from multiplier_lab import _pykernels

try:
    from multiplier_lab import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(7)
    freqs = rng.uniform(0, 1, 3)
    yield "bohr_mask N=1e6 |S|=3", "bohr_mask", (freqs, 0.1, 1_000_000)
    m = np.arange(-64, 65, dtype=float)
    shifts = 32.0 * m
    centers = 32.0 * 9.0 * m
    x = rng.uniform(-2100, 2100, 200_000)
    yield "sinc_train 129 pieces, 2e5 points", "sinc_train", (x, shifts, centers, 0.125, 8, 107.4)
    x_dense = np.linspace(-300, 300, 200_000)
    yield "sinc_train dense overlap", "sinc_train", (x_dense, 4.0 * m, 0.5 * m, 0.125, 8, 107.4)


def run(repeat: int) -> list[dict]:
    rows = []
    for label, name, args in cases():
        row = {"case": label}
        ref = getattr(_pykernels, name)(*args)
        row["numpy_s"] = min(timeit.repeat(lambda: getattr(_pykernels, name)(*args), number=1, repeat=repeat))
        if _ckernels is not None:
            got = np.asarray(getattr(_ckernels, name)(*args))
            row["cython_s"] = min(timeit.repeat(lambda: getattr(_ckernels, name)(*args), number=1, repeat=repeat))
            row["speedup"] = row["numpy_s"] / row["cython_s"]
            row["max_abs_diff"] = float(np.max(np.abs(got.astype(complex) - ref.astype(complex))))
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    rows = run(args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if _ckernels is None:
        print("compiled module not built; numpy timings only")
    print(f"{'case':38s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        print(f"{r['case']:38s} {r['numpy_s']:10.4f} {r.get('cython_s', float('nan')):11.4f} "
              f"{r.get('speedup', float('nan')):8.1f} {r.get('max_abs_diff', float('nan')):10.2e}")


if __name__ == "__main__":
    main()
