# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must stay identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double z
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    z = exp(x)
    return z / (1.0 + z)


cdef inline double _log1pexp(double x) noexcept nogil:
    # log(1 + e^x) without overflow
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


def sgns_train_pairs(double[:, ::1] w_in, double[:, ::1] w_out,
                     const long long[::1] centers, const long long[::1] contexts,
                     const long long[:, ::1] negatives, const double[::1] lrs):
    cdef Py_ssize_t n = centers.shape[0]
    cdef Py_ssize_t dim = w_in.shape[1]
    cdef Py_ssize_t n_neg = negatives.shape[1]
    cdef Py_ssize_t i, j, k
    cdef long long c, o, target
    cdef double f, g, lr, label, total = 0.0
    cdef double[::1] neu1e = np.zeros(dim, dtype=np.float64)

    with nogil:
        for i in range(n):
            c = centers[i]
            o = contexts[i]
            lr = lrs[i]
            for j in range(dim):
                neu1e[j] = 0.0
            for k in range(n_neg + 1):
                if k == 0:
                    target = o
                    label = 1.0
                else:
                    target = negatives[i, k - 1]
                    if target == o:
                        continue
                    label = 0.0
                f = 0.0
                for j in range(dim):
                    f = f + w_in[c, j] * w_out[target, j]
                if label == 1.0:
                    total = total + _log1pexp(-f)
                else:
                    total = total + _log1pexp(f)
                g = (label - _sigmoid(f)) * lr
                for j in range(dim):
                    neu1e[j] = neu1e[j] + g * w_out[target, j]
                for j in range(dim):
                    w_out[target, j] = w_out[target, j] + g * w_in[c, j]
            for j in range(dim):
                w_in[c, j] = w_in[c, j] + neu1e[j]
    return total


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def uf_merge_flags(Py_ssize_t n_nodes, const long long[::1] src, const long long[::1] dst):
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t i, a, b
    cdef Py_ssize_t[::1] parent = np.arange(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] size = np.ones(n_nodes, dtype=np.intp)
    out = np.zeros(m, dtype=np.uint8)
    cdef cnp.uint8_t[::1] flags = out

    with nogil:
        for i in range(m):
            a = _find(parent, src[i])
            b = _find(parent, dst[i])
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] = size[a] + size[b]
            flags[i] = 1
    return out
