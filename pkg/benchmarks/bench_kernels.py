"""Compiled versus pure-Python kernels.

Run: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import timeit

import numpy as np

from beacons import _kernels_py

try:
    from beacons import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _cases(rng: random.Random):
    X = np.array([[rng.randint(0, 500), rng.randint(0, 50), rng.random()] for _ in range(2000)])
    y = np.array([int(r[0] > 250) + int(r[1] > 25) for r in X])
    starts = [rng.randint(0, 1000) for _ in range(6)]
    strides = [rng.randint(1, 7) for _ in range(6)]
    counts = [rng.randint(1000, 20000) for _ in range(6)]
    kinds = [rng.randint(0, 3) for _ in range(64)]
    fps = [rng.uniform(0, 8e6) for _ in range(64)]
    mus = [rng.uniform(0, 4000) for _ in range(64)]
    return {
        "gini_best_split": lambda m: m.gini_best_split(X, y, 3),
        "ap_union_count": lambda m: m.ap_union_count(starts, strides, counts),
        "contention_rates": lambda m: m.contention_rates(kinds, fps, mus, 32 * 2**20,
                                                         16384.0, 0.5),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = _cases(random.Random(0))
    print(f"{'kernel':<18} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, fn in cases.items():
        n = 3 if name == "gini_best_split" else 200
        py = min(timeit.repeat(lambda: fn(_kernels_py), number=n, repeat=args.repeat)) / n
        if _compiled is None:
            print(f"{name:<18} {py * 1e3:>10.3f} {'n/a':>12} {'':>8}")
            continue
        assert fn(_compiled) == fn(_kernels_py), f"{name}: backends disagree"
        cy = min(timeit.repeat(lambda: fn(_compiled), number=n, repeat=args.repeat)) / n
        print(f"{name:<18} {py * 1e3:>10.3f} {cy * 1e3:>12.3f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
