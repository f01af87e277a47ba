"""Can static profile features or pre-period text predict MPR rank?"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.tree import DecisionTreeRegressor

from .corpus import UserProfile, tokenize

log = logging.getLogger(__name__)

F1_COLUMNS = ("followers", "following", "tweet_count", "account_age_days", "bio_length")
HASH_DIM = 64


class DetectError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    users: list[str]
    columns: list[str]
    values: np.ndarray
    feature_set: str
    excluded: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise DetectError("duplicate column names")
        if self.values.shape != (len(self.users), len(self.columns)):
            raise DetectError("values shape does not match users x columns")
        if not np.all(np.isfinite(self.values)):
            raise DetectError("non-finite feature values")

    def select(self, users: Sequence[str]) -> "FeatureMatrix":
        pos = {u: i for i, u in enumerate(self.users)}
        rows = [pos[u] for u in users]
        return FeatureMatrix(list(users), list(self.columns), self.values[rows], self.feature_set)


def standardize(values: np.ndarray) -> np.ndarray:
    """Column-wise z-score with population sigma; constant columns become 0."""
    values = np.asarray(values, dtype=float)
    mu = values.mean(axis=0)
    sd = values.std(axis=0)
    safe = np.where(sd > 0, sd, 1.0)
    return np.where(sd > 0, (values - mu) / safe, 0.0)


def build_f1(profiles: Sequence[UserProfile]) -> FeatureMatrix:
    if not profiles:
        raise DetectError("no profiles")
    raw = np.array([[getattr(p, c) for c in F1_COLUMNS] for p in profiles], dtype=float)
    return FeatureMatrix([p.user_id for p in profiles], list(F1_COLUMNS), standardize(raw), "F1")


def build_f2(tweet_embeddings: Mapping[str, np.ndarray], authorship: Mapping[str, str],
             users: Sequence[str] | None = None) -> FeatureMatrix:
    """Mean-pool each user's tweet vectors. Users listed but without vectors are excluded."""
    dim = None
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for tid in sorted(authorship):
        if tid not in tweet_embeddings:
            continue
        vec = np.asarray(tweet_embeddings[tid], dtype=float)
        if dim is None:
            dim = vec.shape
        elif vec.shape != dim:
            raise DetectError(f"embedding for tweet {tid!r} has shape {vec.shape}, expected {dim}")
        u = authorship[tid]
        if u in sums:
            sums[u] = sums[u] + vec
            counts[u] += 1
        else:
            sums[u] = vec.copy()
            counts[u] = 1
    wanted = sorted(sums) if users is None else list(users)
    have = [u for u in wanted if u in sums]
    excluded = [u for u in wanted if u not in sums]
    if excluded:
        log.info("build_f2: %d user(s) without tweets excluded", len(excluded))
    d = dim[0] if dim else 0
    vals = np.array([sums[u] / counts[u] for u in have]).reshape(len(have), d)
    return FeatureMatrix(have, [f"emb_{i}" for i in range(d)], vals, "F2", excluded)


def combine(a: FeatureMatrix, b: FeatureMatrix) -> FeatureMatrix:
    """Column-concatenate on the users both matrices share (order of ``a``)."""
    common = [u for u in a.users if u in set(b.users)]
    a2, b2 = a.select(common), b.select(common)
    return FeatureMatrix(common, a2.columns + b2.columns, np.hstack([a2.values, b2.values]), "F1F2")


def hash_embed(text: str, dim: int = HASH_DIM) -> np.ndarray:
    """Signed feature hashing of tokens, L2-normalised. Deterministic across runs."""
    vec = np.zeros(dim)
    for tok in tokenize(text):
        h = int.from_bytes(hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest(), "little")
        vec[h % dim] += 1.0 if (h >> 63) & 1 else -1.0
    n = np.linalg.norm(vec)
    return vec / n if n > 0 else vec


def read_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            out[parts[0]] = np.array([float(x) for x in parts[1:]])
    return out


def write_embeddings(emb: Mapping[str, np.ndarray], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tid in sorted(emb):
            fh.write(tid + "\t" + "\t".join(repr(float(x)) for x in emb[tid]) + "\n")


# -- statistics --------------------------------------------------------------------


def spearman(rank_target: Mapping[str, float], feature: Mapping[str, float]) -> float | None:
    """Spearman rho with average ranks for ties; None when either side is constant."""
    if set(rank_target) != set(feature):
        raise DetectError("rank_target and feature must cover the same users")
    if len(rank_target) < 2:
        raise DetectError("need at least two users")
    users = sorted(rank_target)
    a = rankdata([rank_target[u] for u in users])
    b = rankdata([feature[u] for u in users])
    a -= a.mean()
    b -= b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0:
        return None
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def r2_score(y, pred) -> float | None:
    """1 - SS_res / SS_tot; None when y is constant."""
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        return None
    return float(1.0 - np.sum((y - pred) ** 2) / ss_tot)


def train_test_split(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < train_fraction <= 1.0:
        raise DetectError("train_fraction must lie in (0, 1]")
    perm = np.random.default_rng(seed).permutation(n)
    cut = max(1, int(round(train_fraction * n)))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


@dataclass
class RegressionReport:
    model: str
    feature_set: str
    r2: float | None  # held-out
    r2_train: float | None
    train_fraction: float
    seed: int
    n_users: int
    coefficients: list[float] | None = None
    intercept: float | None = None
    singular: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r2_holdout"] = d.pop("r2")
        return d


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float

    def predict(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.coef + self.intercept


def ols(x, y) -> tuple[LinearModel, bool]:
    """Least squares with intercept; minimum-norm solution when rank deficient."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    return LinearModel(beta[1:], float(beta[0])), bool(rank < design.shape[1])


def _xy(x: FeatureMatrix, y: Mapping[str, float]):
    missing = [u for u in x.users if u not in y]
    if missing:
        raise DetectError(f"no target for users {missing[:10]}")
    return x.values, np.array([y[u] for u in x.users], dtype=float)


def fit_linear(x: FeatureMatrix, y: Mapping[str, float], train_fraction: float = 0.8, seed: int = 0):
    xv, yv = _xy(x, y)
    tr, te = train_test_split(len(yv), train_fraction, seed)
    notes = []
    if len(tr) <= xv.shape[1]:
        notes.append("fewer training users than columns; least-squares solution is not unique")
    model, singular = ols(xv[tr], yv[tr])
    if singular:
        notes.append("singular design; minimum-norm solution used")
    r2_te = r2_score(yv[te], model.predict(xv[te])) if len(te) else None
    report = RegressionReport(
        "linear", x.feature_set, r2_te, r2_score(yv[tr], model.predict(xv[tr])),
        train_fraction, seed, len(yv), [float(c) for c in model.coef], model.intercept, singular, notes,
    )
    return model, report


@dataclass
class AdaBoostR2:
    """Drucker's AdaBoost.R2 with linear loss over depth-limited regression trees."""

    rounds: int = 50
    max_depth: int = 3
    seed: int = 0
    estimators: list = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    constant: float | None = None
    round_losses: list[float] = field(default_factory=list)  # weighted mean loss per round

    def fit(self, x, y) -> "AdaBoostR2":
        if self.rounds < 1:
            raise DetectError("rounds must be >= 1")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(y)
        self.estimators, self.weights, self.constant, self.round_losses = [], [], None, []
        if np.all(y == y[0]):
            self.constant = float(y[0])
            return self
        rng = np.random.default_rng(self.seed)
        w = np.full(n, 1.0 / n)
        for _ in range(self.rounds):
            cdf = np.cumsum(w)
            cdf /= cdf[-1]
            sample = np.searchsorted(cdf, rng.random(n), side="right")
            tree = DecisionTreeRegressor(max_depth=self.max_depth, random_state=0)
            tree.fit(x[sample], y[sample])
            err = np.abs(tree.predict(x) - y)
            top = err.max()
            if top == 0:
                self.round_losses.append(0.0)
                self.estimators.append(tree)
                self.weights.append(1.0)
                break
            loss = err / top
            avg = float(np.dot(w, loss))
            self.round_losses.append(avg)
            if avg >= 0.5:
                if not self.estimators:
                    self.estimators.append(tree)
                    self.weights.append(1.0)
                break
            beta = avg / (1.0 - avg)
            self.estimators.append(tree)
            self.weights.append(float(np.log(1.0 / beta)))
            w = w * beta ** (1.0 - loss)
            w /= w.sum()
        return self

    def _median(self, preds: np.ndarray, weights: np.ndarray) -> np.ndarray:
        order = np.argsort(preds, axis=1, kind="stable")
        cum = np.cumsum(weights[order], axis=1)
        pick = (cum >= 0.5 * cum[:, -1:]).argmax(axis=1)
        return preds[np.arange(len(preds)), order[np.arange(len(preds)), pick]]

    def predict(self, x, n_rounds: int | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.constant is not None:
            return np.full(len(x), self.constant)
        m = len(self.estimators) if n_rounds is None else min(n_rounds, len(self.estimators))
        preds = np.column_stack([e.predict(x) for e in self.estimators[:m]])
        return self._median(preds, np.asarray(self.weights[:m]))


def fit_adaboost(x: FeatureMatrix, y: Mapping[str, float], rounds: int = 50, max_depth: int = 3,
                 train_fraction: float = 0.8, seed: int = 0):
    xv, yv = _xy(x, y)
    tr, te = train_test_split(len(yv), train_fraction, seed)
    model = AdaBoostR2(rounds, max_depth, seed).fit(xv[tr], yv[tr])
    notes = []
    if model.constant is not None:
        notes.append("constant target; constant predictor")
    r2_te = r2_score(yv[te], model.predict(xv[te])) if len(te) else None
    report = RegressionReport(
        "adaboost", x.feature_set, r2_te, r2_score(yv[tr], model.predict(xv[tr])),
        train_fraction, seed, len(yv), notes=notes,
    )
    return model, report


def write_reports(reports: Sequence[RegressionReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=1, sort_keys=True)
        fh.write("\n")
