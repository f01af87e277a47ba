import json

import numpy as np
import pytest

from modshift.corpus import UserProfile
from modshift.earlydetect import (
    AdaBoostR2,
    DetectError,
    FeatureMatrix,
    build_f1,
    build_f2,
    combine,
    fit_adaboost,
    fit_linear,
    hash_embed,
    ols,
    r2_score,
    read_embeddings,
    spearman,
    standardize,
    train_test_split,
    write_embeddings,
    write_reports,
)


def as_map(vals):
    return {f"u{i}": float(v) for i, v in enumerate(vals)}


# -- features --------------------------------------------------------------------------


def test_standardize_population_sigma():
    np.testing.assert_allclose(standardize(np.array([[100.0], [300.0]])), [[-1.0], [1.0]])
    assert not standardize(np.array([[5.0], [5.0]])).any()


def test_build_f1_columns_and_bio_length():
    f1 = build_f1([UserProfile("a", 100, bio="ab"), UserProfile("b", 300, bio="abcd")])
    assert f1.columns[0] == "followers" and f1.feature_set == "F1"
    np.testing.assert_allclose(f1.values[:, 0], [-1, 1])
    np.testing.assert_allclose(f1.values[:, f1.columns.index("bio_length")], [-1, 1])


def test_build_f2_mean_and_exclusion():
    emb = {"t1": np.array([1.0, 0.0]), "t2": np.array([0.0, 1.0]), "t3": np.array([2.0, 2.0])}
    f2 = build_f2(emb, {"t1": "a", "t2": "a", "t3": "a"}, users=["a", "b"])
    np.testing.assert_allclose(f2.values, [[1.0, 1.0]])
    assert f2.users == ["a"] and f2.excluded == ["b"]


def test_build_f2_shape_mismatch():
    with pytest.raises(DetectError):
        build_f2({"t1": np.zeros(2), "t2": np.zeros(3)}, {"t1": "a", "t2": "a"})


def test_combine_aligns_users():
    a = FeatureMatrix(["x", "y"], ["c1"], np.array([[1.0], [2.0]]), "F1")
    b = FeatureMatrix(["y"], ["e0"], np.array([[9.0]]), "F2")
    c = combine(a, b)
    assert c.users == ["y"] and c.columns == ["c1", "e0"]
    np.testing.assert_array_equal(c.values, [[2.0, 9.0]])


def test_feature_matrix_guards():
    with pytest.raises(DetectError):
        FeatureMatrix(["a"], ["c", "c"], np.zeros((1, 2)), "F1")
    with pytest.raises(DetectError):
        FeatureMatrix(["a"], ["c"], np.array([[np.nan]]), "F1")


def test_hash_embed_deterministic_and_normalised(tmp_path):
    v = hash_embed("hello world hello")
    np.testing.assert_array_equal(v, hash_embed("hello world hello"))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert not hash_embed("").any()
    write_embeddings({"t1": v}, tmp_path / "e.tsv")
    np.testing.assert_array_equal(read_embeddings(tmp_path / "e.tsv")["t1"], v)


# -- statistics --------------------------------------------------------------------------


def test_spearman_fixtures():
    r = as_map([1, 2, 3, 4])
    assert spearman(r, as_map([10, 20, 30, 40])) == pytest.approx(1.0)
    assert spearman(r, as_map([4, 3, 2, 1])) == pytest.approx(-1.0)
    assert spearman(r, as_map([1, 2, 2, 4])) == pytest.approx(0.9487, abs=1e-4)
    assert spearman(r, as_map([1, 1, 1, 1])) is None


def test_spearman_guards():
    with pytest.raises(DetectError):
        spearman(as_map([1, 2]), as_map([1]))
    with pytest.raises(DetectError):
        spearman(as_map([1]), as_map([1]))


def test_spearman_matches_scipy():
    from scipy.stats import spearmanr

    rng = np.random.default_rng(0)
    a, b = rng.integers(0, 6, 40), rng.integers(0, 6, 40)
    assert spearman(as_map(a), as_map(b)) == pytest.approx(spearmanr(a, b).statistic, abs=1e-12)


def test_r2_mean_predictor_zero():
    y = np.array([1.0, 4.0, 2.0, 8.0])
    assert abs(r2_score(y, np.full(4, y.mean()))) < 1e-9
    assert r2_score(y, y) == 1.0
    assert r2_score([3.0, 3.0], [3.0, 3.0]) is None


def test_ols_recovers_planted_coefficients():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(100, 1))
    model, singular = ols(x, 2 * x[:, 0] + 3)
    assert not singular
    assert model.coef[0] == pytest.approx(2.0, abs=1e-6)
    assert model.intercept == pytest.approx(3.0, abs=1e-6)


def test_ols_residuals_orthogonal():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(50, 3))
    y = rng.normal(size=50)
    model, _ = ols(x, y)
    resid = y - model.predict(x)
    design = np.hstack([np.ones((50, 1)), x])
    np.testing.assert_allclose(design.T @ resid, 0, atol=1e-9)


def test_ols_singular_flag():
    x = np.ones((5, 1))
    _, singular = ols(x, np.arange(5.0))
    assert singular


@pytest.mark.parametrize("seed", range(20))
def test_linear_on_noise_has_near_zero_holdout_r2(seed):
    rng = np.random.default_rng(seed)
    n = 2000
    fm = FeatureMatrix([f"u{i}" for i in range(n)], ["a", "b"], rng.normal(size=(n, 2)), "F1")
    _, rep = fit_linear(fm, as_map(rng.normal(size=n)), seed=seed)
    assert abs(rep.r2) < 0.1


def test_train_test_split():
    tr, te = train_test_split(10, 0.8, 0)
    assert len(tr) == 8 and len(te) == 2 and not set(tr) & set(te)
    with pytest.raises(DetectError):
        train_test_split(10, 0.0, 0)


# -- AdaBoost.R2 -----------------------------------------------------------------------------


def test_adaboost_constant_target():
    m = AdaBoostR2(10).fit(np.arange(6.0)[:, None], np.full(6, 2.5))
    np.testing.assert_array_equal(m.predict(np.zeros((3, 1))), 2.5)


def test_adaboost_two_clusters_with_stumps():
    x = np.r_[np.zeros(20), np.ones(20) * 5][:, None]
    y = np.r_[np.full(20, -1.0), np.full(20, 4.0)]
    m = AdaBoostR2(10, max_depth=1).fit(x, y)
    np.testing.assert_allclose(m.predict(x), y)


@pytest.mark.parametrize("seed", range(6))
def test_adaboost_staged_training_loss_nonincreasing(seed):
    # fixture: a four-level staircase fitted by depth-3 trees
    x = np.linspace(0, 4, 80)[:, None]
    y = np.floor(x[:, 0])
    m = AdaBoostR2(30, max_depth=3, seed=seed).fit(x, y)
    assert all(loss < 0.5 for loss in m.round_losses[: len(m.estimators)])
    staged = [np.mean(np.abs(m.predict(x, k) - y)) for k in range(1, len(m.estimators) + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(staged, staged[1:]))


def test_adaboost_beats_ols_on_piecewise_target():
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 3, (200, 1))
    y = np.where(x[:, 0] > 0, 2.0, -1.0) + np.sin(2 * x[:, 0])
    boost = AdaBoostR2(50, max_depth=3, seed=0).fit(x, y)
    lin, _ = ols(x, y)
    assert r2_score(y, boost.predict(x)) > r2_score(y, lin.predict(x))


def test_adaboost_deterministic():
    rng = np.random.default_rng(4)
    x, y = rng.normal(size=(60, 2)), rng.normal(size=60)
    a = AdaBoostR2(20, seed=3).fit(x, y).predict(x)
    np.testing.assert_array_equal(a, AdaBoostR2(20, seed=3).fit(x, y).predict(x))


def planted_feature_sets(seed, n=1500):
    rng = np.random.default_rng(seed)
    users = [f"u{i}" for i in range(n)]
    f1v, f2v = rng.normal(size=(n, 3)), rng.normal(size=(n, 4))
    y = f1v[:, 0] + 0.8 * f2v[:, 1] + rng.normal(scale=1.0, size=n)
    f1 = FeatureMatrix(users, ["a", "b", "c"], f1v, "F1")
    f2 = FeatureMatrix(users, [f"emb_{i}" for i in range(4)], f2v, "F2")
    return f1, f2, dict(zip(users, y))


@pytest.mark.parametrize("seed", range(5))
def test_combined_features_not_worse(seed):
    f1, f2, y = planted_feature_sets(seed)
    r = {fm.feature_set: fit_linear(fm, y, seed=seed)[1].r2 for fm in (f1, f2, combine(f1, f2))}
    assert r["F1F2"] >= max(r["F1"], r["F2"]) - 0.02


def test_reports_json(tmp_path):
    f1, _, y = planted_feature_sets(0, n=100)
    _, lin = fit_linear(f1, y)
    _, boost = fit_adaboost(f1, y, rounds=5)
    write_reports([lin, boost], tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert [d["model"] for d in doc] == ["linear", "adaboost"]
    assert "r2_holdout" in doc[0] and "r2" not in doc[0]


def test_missing_target_raises():
    f1, _, y = planted_feature_sets(0, n=10)
    y.pop("u0")
    with pytest.raises(DetectError):
        fit_linear(f1, y)
