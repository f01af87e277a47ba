"""Hot-loop dispatch: compiled Cython kernels when built, pure Python otherwise.

Set ``MODSHIFT_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("MODSHIFT_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def sgns_train_pairs(w_in, w_out, centers, contexts, negatives, lrs, backend=None):
    """Run one SGD step of skip-gram negative sampling per (center, context) pair.

    ``w_in`` and ``w_out`` are updated in place. ``negatives`` has one row of
    sampled output indices per pair; entries equal to the context are skipped.
    Returns the summed loss evaluated before each update.
    """
    impl = _pick(backend)
    return impl.sgns_train_pairs(
        w_in,
        w_out,
        np.ascontiguousarray(centers, dtype=np.int64),
        np.ascontiguousarray(contexts, dtype=np.int64),
        np.ascontiguousarray(negatives, dtype=np.int64).reshape(len(centers), -1),
        np.ascontiguousarray(lrs, dtype=np.float64),
    )


def uf_merge_flags(n_nodes, src, dst, backend=None):
    """Stream edges through a union-find; flag each edge that joined two components."""
    impl = _pick(backend)
    return impl.uf_merge_flags(
        int(n_nodes),
        np.ascontiguousarray(src, dtype=np.int64),
        np.ascontiguousarray(dst, dtype=np.int64),
    )


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
