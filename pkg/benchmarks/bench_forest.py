"""Benchmark the compiled forest kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_forest.py [--trees 64] [--rows 800] [--dim 30]

Also sanity-checks that both backends grow identical trees before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ptdiscovery.forest import Hyperparams, forests_equal, predict_matrix, train_forest
from ptdiscovery.forest.backend import get_backend


def time_backend(name: str, pos, unl, X, hp, repeats: int) -> tuple[float, float]:
    train_times = []
    predict_times = []
    forest = None
    for r in range(repeats):
        t0 = time.perf_counter()
        forest = train_forest(pos, unl, X, hp, master_seed=7, backend_name=name)
        train_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        predict_matrix(forest, X, backend_name=name)
        predict_times.append(time.perf_counter() - t0)
    return min(train_times), min(predict_times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", type=int, default=64)
    parser.add_argument("--rows", type=int, default=800)
    parser.add_argument("--dim", type=int, default=30)
    parser.add_argument("--examples", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(11)
    X = rng.normal(size=(args.rows, args.dim))
    n_pos = max(4, args.rows // 10)
    X[:n_pos, : max(3, args.dim // 6)] += 2.0
    pos = np.arange(n_pos)
    unl = np.arange(n_pos, args.rows)
    hp = Hyperparams(
        n_trees=args.trees,
        n_examples_per_tree=args.examples,
        positive_fraction=0.1,
    )

    backends = ["python"]
    try:
        get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled kernel unavailable; timing the fallback only")

    if len(backends) == 2:
        small = Hyperparams(n_trees=8, n_examples_per_tree=80, positive_fraction=0.2)
        a = train_forest(pos, unl, X, small, master_seed=3, backend_name="cython")
        b = train_forest(pos, unl, X, small, master_seed=3, backend_name="python")
        assert forests_equal(a, b), "backends disagree; benchmark aborted"
        print("backends emit identical trees on the check fixture\n")

    print(f"{args.trees} trees, {args.examples} examples/tree, pool {args.rows}x{args.dim}")
    print(f"{'backend':<10}{'train':>12}{'predict':>12}")
    results = {}
    for name in backends:
        train_s, predict_s = time_backend(name, pos, unl, X, hp, args.repeats)
        results[name] = (train_s, predict_s)
        print(f"{name:<10}{train_s:>11.3f}s{predict_s:>11.3f}s")
    if len(results) == 2:
        speedup = results["python"][0] / results["cython"][0]
        print(f"\ncompiled kernel speedup: {speedup:.1f}x on training")


if __name__ == "__main__":
    main()
