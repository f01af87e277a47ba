"""Time the compiled and pure-Python kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--pairs N] [--edges N] [--repeat N]
"""

import argparse
import time

import numpy as np

from modshift import kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def sgns_case(n_pairs, n_vocab=5000, dim=100, n_neg=5, seed=0):
    rng = np.random.default_rng(seed)
    w_in = (rng.random((n_vocab, dim)) - 0.5) / dim
    w_out = np.zeros((n_vocab, dim))
    centers = rng.integers(0, n_vocab, n_pairs)
    contexts = rng.integers(0, n_vocab, n_pairs)
    negs = rng.integers(0, n_vocab, (n_pairs, n_neg))
    lrs = np.full(n_pairs, 0.025)
    return w_in, w_out, centers, contexts, negs, lrs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20000)
    ap.add_argument("--edges", type=int, default=200000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the Python backend only")

    rows = []
    case = sgns_case(args.pairs)
    for b in backends:
        t = best_of(lambda: kernels.sgns_train_pairs(*(x.copy() for x in case), backend=b), args.repeat)
        rows.append(("sgns_train_pairs", f"{args.pairs} pairs", b, t))

    rng = np.random.default_rng(1)
    n_nodes = args.edges // 2
    src, dst = rng.integers(0, n_nodes, args.edges), rng.integers(0, n_nodes, args.edges)
    for b in backends:
        t = best_of(lambda: kernels.uf_merge_flags(n_nodes, src, dst, backend=b), args.repeat)
        rows.append(("uf_merge_flags", f"{args.edges} edges", b, t))

    print(f"{'kernel':<18} {'size':<14} {'backend':<8} {'seconds':>9}")
    for name, size, b, t in rows:
        print(f"{name:<18} {size:<14} {b:<8} {t:>9.4f}")
    if len(backends) == 2:
        for name in ("sgns_train_pairs", "uf_merge_flags"):
            py, cy = (t for n, _, _, t in rows if n == name)
            print(f"{name}: compiled is {py / cy:.1f}x faster")


if __name__ == "__main__":
    main()
