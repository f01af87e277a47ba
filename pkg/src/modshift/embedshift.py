"""Skip-gram negative-sampling embeddings per period and topic/keyword cosine shifts."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .corpus import TokenStream, preprocess

CROSS_MODEL_CAVEAT = (
    "cosines come from independently trained embedding spaces; compare "
    "before/after values qualitatively, not as calibrated magnitudes"
)


class EmbedError(ValueError):
    pass


@dataclass(frozen=True)
class SGNSConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    subsample: float = 1e-3
    lr: float = 0.025
    min_lr_frac: float = 1e-4
    seed: int = 0
    shuffle: bool = False
    # sort sentences before training so the model ignores input order
    canonical_order: bool = False

    def __post_init__(self):
        if self.dim <= 0 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise EmbedError("need dim > 0, window >= 1, negatives >= 1, epochs >= 1")
        if self.min_count < 1 or self.lr <= 0 or self.subsample < 0:
            raise EmbedError("need min_count >= 1, lr > 0, subsample >= 0")


@dataclass
class EmbeddingModel:
    vocab: dict[str, int]
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    config: SGNSConfig = field(default_factory=SGNSConfig)
    counts: np.ndarray | None = None
    loss_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @property
    def words(self) -> list[str]:
        return sorted(self.vocab, key=self.vocab.__getitem__)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.input_vectors[self.vocab[word]]


# -- objective -----------------------------------------------------------------


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_pair_loss(v, u_pos, u_neg) -> float:
    """-log s(u_pos.v) - sum_k log s(-u_neg[k].v) for one (center, context) pair."""
    v = np.asarray(v, dtype=float)
    loss = -_log_sigmoid(np.dot(u_pos, v))
    loss -= np.sum(_log_sigmoid(-(np.asarray(u_neg) @ v)))
    return float(loss)


def sgns_pair_grad(v, u_pos, u_neg):
    """Analytic gradient of :func:`sgns_pair_loss` w.r.t. (v, u_pos, u_neg)."""
    v = np.asarray(v, dtype=float)
    u_pos = np.asarray(u_pos, dtype=float)
    u_neg = np.atleast_2d(np.asarray(u_neg, dtype=float))
    e_pos = _sigmoid(u_pos @ v) - 1.0
    e_neg = _sigmoid(u_neg @ v)
    gv = e_pos * u_pos + e_neg @ u_neg
    return gv, e_pos * v, np.outer(e_neg, v)


# -- training --------------------------------------------------------------------


def _as_tokens(s) -> tuple[str, ...]:
    if isinstance(s, TokenStream):
        return s.tokens
    return tuple(s)


def build_vocab(sentences: Sequence[tuple[str, ...]], min_count: int) -> tuple[dict[str, int], np.ndarray]:
    c = Counter()
    for s in sentences:
        c.update(s)
    kept = sorted((w for w, n in c.items() if n >= min_count), key=lambda w: (-c[w], w))
    return {w: i for i, w in enumerate(kept)}, np.array([c[w] for w in kept], dtype=np.int64)


def _window_pairs(n: int, reduced: np.ndarray):
    centers, contexts = [], []
    for i in range(n):
        b = int(reduced[i])
        lo, hi = max(0, i - b), min(n, i + b + 1)
        for j in range(lo, hi):
            if j != i:
                centers.append(i)
                contexts.append(j)
    return centers, contexts


def train_sgns(corpus: Iterable, config: SGNSConfig | None = None, backend: str | None = None) -> EmbeddingModel:
    """Train skip-gram with negative sampling.

    All randomness (init, subsampling, reduced windows, negatives, shuffling)
    comes from one generator seeded by ``config.seed``; the update kernel is
    deterministic, so equal inputs give bitwise-equal models on one backend.
    """
    cfg = config or SGNSConfig()
    sentences = [_as_tokens(s) for s in corpus]
    if cfg.canonical_order:
        sentences.sort()
    if not any(sentences):
        raise EmbedError("empty corpus")
    vocab, counts = build_vocab(sentences, cfg.min_count)
    if not vocab:
        raise EmbedError(f"empty vocabulary after min_count={cfg.min_count} pruning")
    encoded = [np.array([vocab[w] for w in s if w in vocab], dtype=np.int64) for s in sentences]
    encoded = [e for e in encoded if e.size]
    n_vocab, dim = len(vocab), cfg.dim
    total_words = int(counts.sum())

    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((n_vocab, dim)) - 0.5) / dim
    w_out = np.zeros((n_vocab, dim))

    if cfg.subsample > 0:
        freq = counts / total_words
        keep_prob = np.minimum(1.0, (np.sqrt(freq / cfg.subsample) + 1.0) * cfg.subsample / freq)
    else:
        keep_prob = np.ones(n_vocab)
    noise = counts.astype(float) ** 0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)
    noise_cdf[-1] = 1.0

    budget = cfg.epochs * total_words
    done = 0
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(encoded)) if cfg.shuffle else range(len(encoded))
        all_c, all_o, all_lr = [], [], []
        for si in order:
            sent = encoded[si]
            progress = (done + np.arange(sent.size)) / budget
            lr_tok = cfg.lr * np.maximum(cfg.min_lr_frac, 1.0 - progress)
            done += sent.size
            kept = rng.random(sent.size) < keep_prob[sent]
            idx = np.flatnonzero(kept)
            if idx.size < 2:
                continue
            reduced = rng.integers(1, cfg.window + 1, size=idx.size)
            ci, oi = _window_pairs(idx.size, reduced)
            if not ci:
                continue
            ci = idx[np.asarray(ci)]
            oi = idx[np.asarray(oi)]
            all_c.append(sent[ci])
            all_o.append(sent[oi])
            all_lr.append(lr_tok[ci])
        if not all_c:
            continue
        centers = np.concatenate(all_c)
        contexts = np.concatenate(all_o)
        lrs = np.concatenate(all_lr)
        negs = np.searchsorted(noise_cdf, rng.random((centers.size, cfg.negatives)), side="right")
        loss = kernels.sgns_train_pairs(w_in, w_out, centers, contexts, negs, lrs, backend=backend)
        history.append(loss / centers.size)
    return EmbeddingModel(vocab, w_in, w_out, cfg, counts, history)


# -- queries ---------------------------------------------------------------------


def phrase_vector(model: EmbeddingModel, phrase: str) -> np.ndarray | None:
    """Mean input vector of the phrase's in-vocabulary tokens, or None."""
    rows = [model.vocab[t] for t in preprocess(phrase).tokens if t in model.vocab]
    if not rows:
        return None
    return model.input_vectors[rows].mean(axis=0)


def cosine(a, b) -> float | None:
    if a is None or b is None:
        return None
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0 or not (math.isfinite(na) and math.isfinite(nb)):
        return None
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class SimilarityPair:
    topic: str
    keyword: str
    cos_before: float | None
    cos_after: float | None


def similarity_shift(model_pre: EmbeddingModel, model_post: EmbeddingModel, pairs) -> list[SimilarityPair]:
    out = []
    for topic, keyword in pairs:
        before = cosine(phrase_vector(model_pre, topic), phrase_vector(model_pre, keyword))
        after = cosine(phrase_vector(model_post, topic), phrase_vector(model_post, keyword))
        out.append(SimilarityPair(topic, keyword, before, after))
    return out


# -- files --------------------------------------------------------------------------


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """word2vec-style text: ``<vocab size> <dim>`` header, then one word per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.vocab)} {model.dim}\n")
        for w in model.words:
            vals = " ".join(repr(float(x)) for x in model.vector(w))
            fh.write(f"{w} {vals}\n")


def load_model(path: str | Path) -> EmbeddingModel:
    """Load input vectors written by :func:`save_model` (output vectors are not stored)."""
    with open(path, encoding="utf-8") as fh:
        n, dim = (int(x) for x in fh.readline().split())
        vocab, rows = {}, []
        for i in range(n):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EmbedError(f"{path}: line {i + 2} has {len(parts) - 1} values, expected {dim}")
            vocab[parts[0]] = i
            rows.append([float(x) for x in parts[1:]])
    vecs = np.array(rows, dtype=float).reshape(n, dim)
    return EmbeddingModel(vocab, vecs, np.zeros_like(vecs), SGNSConfig(dim=dim))


def read_pairs(path: str | Path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or not row[0].strip():
                continue
            if row[0].strip().lower() == "topic" and row[1].strip().lower() == "keyword":
                continue
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def _fmt(x):
    return "NA" if x is None else repr(x)


def write_similarity(rows: Iterable[SimilarityPair], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topic", "keyword", "cos_before", "cos_after"])
        for r in rows:
            w.writerow([r.topic, r.keyword, _fmt(r.cos_before), _fmt(r.cos_after)])


def config_dict(cfg: SGNSConfig) -> dict:
    return asdict(cfg)
