"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Both backends consume the same pre-drawn random arrays, so they agree up to
floating-point summation order.
"""

import math

import numpy as np


def _log1pexp(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def sgns_train_pairs(w_in, w_out, centers, contexts, negatives, lrs):
    total = 0.0
    n_neg = negatives.shape[1]
    for i in range(centers.shape[0]):
        c = centers[i]
        o = contexts[i]
        lr = lrs[i]
        v = w_in[c]
        neu1e = np.zeros_like(v)
        for k in range(n_neg + 1):
            if k == 0:
                target, label = o, 1.0
            else:
                target = negatives[i, k - 1]
                if target == o:
                    continue
                label = 0.0
            u = w_out[target]
            f = float(v @ u)
            total += _log1pexp(-f) if label == 1.0 else _log1pexp(f)
            g = (label - _sigmoid(f)) * lr
            neu1e += g * u
            u += g * v
        v += neu1e
    return total


def uf_merge_flags(n_nodes, src, dst):
    parent = list(range(n_nodes))
    size = [1] * n_nodes
    flags = np.zeros(len(src), dtype=np.uint8)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, (s, d) in enumerate(zip(src.tolist(), dst.tolist())):
        a, b = find(s), find(d)
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        flags[i] = 1
    return flags
