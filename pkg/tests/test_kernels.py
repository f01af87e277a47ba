import numpy as np
import pytest

from modshift import _kernels_py, kernels


def _sgns_inputs(seed=0, n_vocab=12, dim=8, n_pairs=300, n_neg=4):
    rng = np.random.default_rng(seed)
    w_in = (rng.random((n_vocab, dim)) - 0.5) / dim
    w_out = rng.normal(0, 0.1, (n_vocab, dim))
    centers = rng.integers(0, n_vocab, n_pairs)
    contexts = rng.integers(0, n_vocab, n_pairs)
    negs = rng.integers(0, n_vocab, (n_pairs, n_neg))
    lrs = np.linspace(0.05, 0.001, n_pairs)
    return w_in, w_out, centers, contexts, negs, lrs


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.uf_merge_flags(2, np.array([0]), np.array([1]), backend="fortran")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_sgns_backends_agree():
    a = _sgns_inputs()
    b = [x.copy() for x in a]
    la = kernels.sgns_train_pairs(*a, backend="cython")
    lb = kernels.sgns_train_pairs(*b, backend="python")
    assert la == pytest.approx(lb, rel=1e-12)
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
@pytest.mark.parametrize("seed", range(5))
def test_union_find_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n = 60
    src, dst = rng.integers(0, n, 150), rng.integers(0, n, 150)
    np.testing.assert_array_equal(kernels.uf_merge_flags(n, src, dst, backend="cython"),
                                  kernels.uf_merge_flags(n, src, dst, backend="python"))


def test_union_find_flags_count_merges():
    flags = _kernels_py.uf_merge_flags(4, np.array([0, 1, 0, 2]), np.array([1, 0, 1, 3]))
    assert flags.tolist() == [1, 0, 0, 1]


def test_sgns_skips_negative_equal_to_context():
    w_in, w_out, *_ = _sgns_inputs(n_pairs=1)
    w_out0 = w_out.copy()
    kernels.sgns_train_pairs(w_in, w_out, np.array([0]), np.array([1]), np.array([[1, 1]]), np.array([0.1]))
    changed = np.flatnonzero(np.any(w_out != w_out0, axis=1))
    assert changed.tolist() == [1]


def test_env_forces_python_fallback():
    import os
    import subprocess
    import sys

    env = {**os.environ, "MODSHIFT_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "from modshift import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
