"""Time tree induction with the compiled and the numpy split kernels.

Usage: python benchmarks/bench_kernels.py [--rows N] [--features P] [--repeat R]
"""

import argparse
import statistics
import time

import numpy as np

from tsesent import kernels
from tsesent.classifier.learners import Bagging, C45Tree


def sparse_problem(n, p, seed=0):
    # lexicon features are mostly zero, like real comment vectors
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * (rng.random((n, p)) < 0.05)
    w = rng.normal(size=p)
    y = (X @ w + 0.3 * rng.normal(size=n) > 0).astype(np.int8)
    return X, y


def timed(fn, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=1800)
    ap.add_argument("--features", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    X, y = sparse_problem(args.rows, args.features)
    backends = [b for b in ("cython", "numpy") if b in kernels.BACKENDS]
    if len(backends) == 1:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{args.rows} rows x {args.features} features, median of {args.repeat}")

    trees, times = {}, {}
    for name in backends:
        t_tree, tree = timed(lambda: C45Tree(backend=name).fit(X, y), args.repeat)
        t_bag, _ = timed(lambda: Bagging(n_estimators=25, seed=0, backend=name).fit(X, y), 1)
        trees[name], times[name] = tree.to_dict(), (t_tree, t_bag)
        print(f"  {name:<7} single tree {t_tree * 1e3:8.1f} ms   bagging(25) {t_bag:6.2f} s   nodes {tree.node_count}")

    if len(backends) == 2:
        same = trees["cython"] == trees["numpy"]
        speedup = times["numpy"][0] / times["cython"][0]
        print(f"identical trees: {same}   tree speedup: {speedup:.1f}x")
        if not same:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
