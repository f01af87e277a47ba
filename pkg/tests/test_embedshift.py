import numpy as np
import pytest

from modshift import kernels
from modshift.embedshift import (
    EmbedError,
    EmbeddingModel,
    SGNSConfig,
    cosine,
    load_model,
    phrase_vector,
    read_pairs,
    save_model,
    sgns_pair_grad,
    sgns_pair_loss,
    similarity_shift,
    train_sgns,
    write_similarity,
)

A = ["apple", "banana", "cherry", "grape", "mango"]
B = ["engine", "piston", "gearbox", "clutch", "brake"]


def two_cluster_corpus(seed, n=600, length=8):
    rng = np.random.default_rng(seed)
    return [tuple(rng.choice(A if i % 2 else B, size=length)) for i in range(n)]


def small_cfg(**kw):
    base = dict(dim=16, window=3, negatives=5, epochs=5, min_count=1, subsample=0.0, lr=0.05, seed=0)
    base.update(kw)
    return SGNSConfig(**base)


def test_finite_difference_gradient():
    rng = np.random.default_rng(7)
    dim, h = 6, 1e-5
    # 5-word model: one center, one context, three negatives
    v, u_pos, u_neg = rng.normal(size=dim), rng.normal(size=dim), rng.normal(size=(3, dim))
    gv, gp, gn = sgns_pair_grad(v, u_pos, u_neg)
    params = [v, u_pos, u_neg]
    worst = 0.0
    for which, grad in enumerate((gv, gp, gn)):
        for idx in np.ndindex(params[which].shape):
            plus = [p.copy() for p in params]
            minus = [p.copy() for p in params]
            plus[which][idx] += h
            minus[which][idx] -= h
            fd = (sgns_pair_loss(*plus) - sgns_pair_loss(*minus)) / (2 * h)
            worst = max(worst, abs(fd - grad[idx]) / max(abs(fd), abs(grad[idx]), 1e-8))
    assert worst < 1e-4


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=pytest.mark.skipif(
    kernels.BACKEND != "cython", reason="compiled extension not built"))])
def test_kernel_step_is_gradient_descent(backend):
    rng = np.random.default_rng(3)
    w_in, w_out = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    lr = 0.05
    v, up, un = w_in[0].copy(), w_out[1].copy(), w_out[[2, 3, 4]].copy()
    loss = kernels.sgns_train_pairs(w_in, w_out, np.array([0]), np.array([1]), np.array([[2, 3, 4]]),
                                    np.array([lr]), backend=backend)
    gv, gp, gn = sgns_pair_grad(v, up, un)
    assert loss == pytest.approx(sgns_pair_loss(v, up, un), rel=1e-12)
    np.testing.assert_allclose(w_in[0], v - lr * gv, atol=1e-12)
    np.testing.assert_allclose(w_out[1], up - lr * gp, atol=1e-12)
    np.testing.assert_allclose(w_out[[2, 3, 4]], un - lr * gn, atol=1e-12)


def _cluster_gap(model):
    def mean_cos(xs, ys):
        vals = [cosine(model.vector(a), model.vector(b)) for a in xs for b in ys if a != b]
        return float(np.mean(vals))

    intra = (mean_cos(A, A) + mean_cos(B, B)) / 2
    return intra, mean_cos(A, B)


@pytest.mark.parametrize("seed", range(10))
def test_two_clusters_separate(seed):
    model = train_sgns(two_cluster_corpus(seed), small_cfg(seed=seed))
    intra, inter = _cluster_gap(model)
    assert intra > inter


def test_loss_decreases_over_epochs():
    model = train_sgns(two_cluster_corpus(0), small_cfg())
    assert model.loss_history[-1] < model.loss_history[0]


def test_deterministic_given_seed():
    c = two_cluster_corpus(1, n=100)
    a, b = train_sgns(c, small_cfg(seed=4)), train_sgns(c, small_cfg(seed=4))
    np.testing.assert_array_equal(a.input_vectors, b.input_vectors)
    other = train_sgns(c, small_cfg(seed=5))
    assert not np.array_equal(a.input_vectors, other.input_vectors)


def test_canonical_order_makes_training_permutation_invariant():
    c = two_cluster_corpus(2, n=100)
    shuffled = [c[i] for i in np.random.default_rng(0).permutation(len(c))]
    cfg = small_cfg(canonical_order=True)
    np.testing.assert_array_equal(train_sgns(c, cfg).input_vectors, train_sgns(shuffled, cfg).input_vectors)


def test_empty_vocab_raises():
    with pytest.raises(EmbedError, match="min_count"):
        train_sgns([("a", "b")], small_cfg(min_count=5))
    with pytest.raises(EmbedError):
        train_sgns([], small_cfg())


def test_bad_config():
    with pytest.raises(EmbedError):
        SGNSConfig(dim=0)


def _toy_model():
    vecs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    return EmbeddingModel({"red": 0, "blue": 1, "purple": 2, "void": 3}, vecs, np.zeros_like(vecs))


def test_phrase_vector_is_mean_of_known_tokens():
    m = _toy_model()
    np.testing.assert_allclose(phrase_vector(m, "Red blue unknownword"), [0.5, 0.5])
    assert phrase_vector(m, "nothing known") is None


def test_cosine_edge_cases():
    assert cosine([1, 0], [2, 0]) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 0]) is None
    assert cosine(None, [1, 0]) is None


def test_similarity_shift_and_na_output(tmp_path):
    m = _toy_model()
    rows = similarity_shift(m, m, [("red", "purple"), ("red", "void"), ("red", "zzz")])
    assert rows[0].cos_before == pytest.approx(1 / np.sqrt(2))
    assert rows[1].cos_after is None and rows[2].cos_before is None
    write_similarity(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "topic,keyword,cos_before,cos_after"
    assert lines[2] == "red,void,NA,NA"


def test_save_load_roundtrip(tmp_path):
    m = train_sgns(two_cluster_corpus(0, n=50), small_cfg(dim=5))
    save_model(m, tmp_path / "m.txt")
    back = load_model(tmp_path / "m.txt")
    assert back.vocab == m.vocab
    np.testing.assert_array_equal(back.input_vectors, m.input_vectors)


def test_read_pairs(tmp_path):
    p = tmp_path / "pairs.csv"
    p.write_text("topic,keyword\nliberal,commie\n\n", encoding="utf-8")
    assert read_pairs(p) == [("liberal", "commie")]
