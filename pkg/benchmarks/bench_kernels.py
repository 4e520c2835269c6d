"""Benchmark the compiled kernels against the numpy fallbacks.

Runs the same booster fit and single-vector prediction workload through
both backends and reports wall times plus prediction agreement. The
backends may differ in the last float bits (different summation order), so
agreement is checked to a tolerance, not bit-exactly.

    python benchmarks/bench_kernels.py [--rows 20000] [--rounds 30]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def make_dataset(rows: int, cols: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    z = 2.5 * X[:, 0] - 1.8 * X[:, 1] + 0.9 * X[:, 2] * X[:, 3]
    y = np.digitize(z, [-2.0, 1.0, 3.0])
    return X, y


def run_backend(force_python: bool, rows: int, rounds: int):
    import os

    os.environ["CRASHCAST_FORCE_PY_KERNELS"] = "1" if force_python else "0"
    import crashcast.boosting.kernels as kernels

    importlib.reload(kernels)
    import crashcast.boosting.tree as tree

    importlib.reload(tree)
    import crashcast.boosting.booster as booster

    importlib.reload(booster)

    X, y = make_dataset(rows, 19)
    cfg = booster.BoosterConfig(
        variant=booster.Variant.DEPTHWISE, n_estimators=rounds, max_depth=3,
        learning_rate=0.15, reg_lambda=1.0, seed=7,
    )
    t0 = time.perf_counter()
    model = booster.fit_depthwise(X, y, cfg)
    fit_s = time.perf_counter() - t0

    probe = X[:1000]
    t0 = time.perf_counter()
    for row in probe:
        model.predict_margins_one(row)
    predict_s = time.perf_counter() - t0

    margins = model.predict_margins(probe)
    return kernels.BACKEND, fit_s, predict_s, margins


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--rounds", type=int, default=30)
    args = parser.parse_args()

    name_py, fit_py, pred_py, margins_py = run_backend(True, args.rows, args.rounds)
    print(f"{name_py:>7}: fit {fit_py:6.2f}s   1k single predictions {pred_py * 1000:7.1f}ms")
    name_cy, fit_cy, pred_cy, margins_cy = run_backend(False, args.rows, args.rounds)
    print(f"{name_cy:>7}: fit {fit_cy:6.2f}s   1k single predictions {pred_cy * 1000:7.1f}ms")

    if name_cy == name_py:
        print("compiled extension not built; both runs used the numpy fallback")
        return
    print(f"speedup: fit {fit_py / fit_cy:4.2f}x   predict-one {pred_py / pred_cy:4.2f}x")
    diff = float(np.abs(margins_py - margins_cy).max())
    print(f"max |margin difference| between backends: {diff:.3e}")


if __name__ == "__main__":
    main()
