"""Per-snapshot PageRank and Moving-PageRank influencer detection."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import UserProfile, preprocess
from .lexshift import CountTable, PriorTable, ScoredWord, log_odds_dirichlet
from .tempograph import Snapshot, TemporalEdgeList

log = logging.getLogger(__name__)

DAMPING = 0.85
TOLERANCE = 1e-9
MAX_ITER = 200
DEFAULT_TOPK = 1000


class InfluenceError(ValueError):
    pass


def pagerank_arrays(n, src, dst, damping=DAMPING, tol=TOLERANCE, max_iter=MAX_ITER, directed=True):
    """Power iteration on an n-node edge list. Returns (vector, iterations, converged).

    Dangling mass is spread uniformly. Iteration stops once the L1 change
    drops below ``tol``.
    """
    if not 0.0 < damping < 1.0:
        raise InfluenceError("damping must lie in (0, 1)")
    if tol <= 0:
        raise InfluenceError("tolerance must be positive")
    if n == 0:
        return np.zeros(0), 0, True
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if not directed:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    a = sparse.csr_matrix((np.ones(src.size), (dst, src)), shape=(n, n))
    a.sum_duplicates()
    a.data[:] = 1.0  # parallel edges count once
    outdeg = np.asarray(a.sum(axis=0)).ravel()
    dangling = outdeg == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, outdeg))
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = damping * (a @ (x * inv)) + (damping * x[dangling].sum() + 1.0 - damping) / n
        nxt /= nxt.sum()
        err = np.abs(nxt - x).sum()
        x = nxt
        if err < tol:
            converged = True
            break
    if not converged:
        log.warning("pagerank: no convergence after %d iterations (L1 change %.3g)", max_iter, err)
    return x, it, converged


def pagerank(g: Snapshot, damping=DAMPING, tolerance=TOLERANCE, max_iter=MAX_ITER) -> dict:
    nodes = sorted(g.nodes)
    if not nodes:
        return {}
    idx = {u: i for i, u in enumerate(nodes)}
    src = [idx[s] for s, _ in g.edges]
    dst = [idx[d] for _, d in g.edges]
    x, _, _ = pagerank_arrays(len(nodes), src, dst, damping, tolerance, max_iter, g.directed)
    return {u: float(v) for u, v in zip(nodes, x)}


@dataclass
class PageRankSeries:
    """PageRank per daily snapshot; row t of ``matrix`` is timestep t+1.

    Users absent from a snapshot hold 0.
    """

    days: list[int]
    users: list[str]
    matrix: np.ndarray
    damping: float = DAMPING
    tolerance: float = TOLERANCE
    converged: list[bool] | None = None

    def vector(self, day: int) -> dict:
        row = self.matrix[self.days.index(day)]
        return {u: float(v) for u, v in zip(self.users, row) if v > 0}


def pagerank_series(
    edges: TemporalEdgeList, damping=DAMPING, tolerance=TOLERANCE, max_iter=MAX_ITER, directed=None
) -> PageRankSeries:
    directed = edges.directed if directed is None else directed
    src, dst, day = edges.arrays
    users = edges.nodes
    n_per_day = edges.nodes_per_day()
    mat = np.zeros((edges.days, len(users)))
    conv = []
    for d in range(edges.days):
        # nodes are indexed in order of first appearance, so day d uses a prefix
        m = edges.edge_count_through(d)
        nd = int(n_per_day[d])
        x, _, ok = pagerank_arrays(nd, src[:m], dst[:m], damping, tolerance, max_iter, directed)
        mat[d, :nd] = x
        conv.append(ok)
    return PageRankSeries(list(range(edges.days)), users, mat, damping, tolerance, conv)


@dataclass(frozen=True)
class MprScore:
    user: str
    f1: float
    f2: float
    f3: float
    rank_f1: int
    rank_f2: int
    rank_f3: int


def _ranks(values: np.ndarray, users: Sequence[str]) -> np.ndarray:
    order = sorted(range(len(users)), key=lambda i: (-values[i], users[i]))
    ranks = np.empty(len(users), dtype=np.int64)
    ranks[order] = np.arange(1, len(users) + 1)
    return ranks


def mpr_matrix(pr: np.ndarray, t1: int, t2: int, disjoint: bool = False):
    """f1, f2, f3 arrays from a (timesteps x users) PageRank matrix.

    Timesteps are 1-based: row 0 is t=1. f3 compares max over [1, t1] with
    max over [t1, t2]; ``disjoint`` uses [t1 + 1, t2] for the second window.
    """
    if not 1 <= t1 < t2:
        raise InfluenceError(f"need 1 <= t1 < t2, got t1={t1}, t2={t2}")
    if t2 > pr.shape[0]:
        raise InfluenceError(f"t2={t2} beyond the {pr.shape[0]} available timesteps")
    f1 = np.zeros(pr.shape[1])
    f2 = np.zeros(pr.shape[1])
    for t in range(1, t2):
        step = np.abs(pr[t] - pr[t - 1])
        f1 += step
        np.maximum(f2, step, out=f2)
    lo = t1 if disjoint else t1 - 1
    f3 = np.abs(pr[:t1].max(axis=0) - pr[lo:t2].max(axis=0))
    return f1, f2, f3


def mpr_scores(series: PageRankSeries, t1: int, t2: int | None = None, disjoint: bool = False) -> list[MprScore]:
    t2 = len(series.days) if t2 is None else t2
    f1, f2, f3 = mpr_matrix(series.matrix, t1, t2, disjoint)
    users = series.users
    r1, r2, r3 = _ranks(f1, users), _ranks(f2, users), _ranks(f3, users)
    return [
        MprScore(u, float(f1[i]), float(f2[i]), float(f3[i]), int(r1[i]), int(r2[i]), int(r3[i]))
        for i, u in enumerate(users)
    ]


@dataclass(frozen=True)
class InfluencerSet:
    users: frozenset
    k: int


def top_k(scores: Sequence[MprScore], k: int, key: str) -> set[str]:
    ranked = sorted(scores, key=lambda s: (-getattr(s, key), s.user))
    return {s.user for s in ranked[:k]}


def influencer_intersection(
    scores: Sequence[MprScore], k: int = DEFAULT_TOPK, exclusions: Iterable[str] = ()
) -> InfluencerSet:
    """Users in the top-k of all three MPR functions, minus vetted exclusions."""
    if k < 1:
        raise InfluenceError("k must be >= 1")
    chosen = top_k(scores, k, "f1") & top_k(scores, k, "f2") & top_k(scores, k, "f3")
    return InfluencerSet(frozenset(chosen - set(exclusions)), k)


def composite_rank(scores: Sequence[MprScore]) -> dict[str, int]:
    """1-based rank by f1, then f2, then f3 (all descending), then user id."""
    ranked = sorted(scores, key=lambda s: (-s.f1, -s.f2, -s.f3, s.user))
    return {s.user: i for i, s in enumerate(ranked, start=1)}


def bio_tokens(bio: str, lemmas: Mapping[str, str] | None = None) -> tuple[str, ...]:
    return preprocess(bio, mode="bio", lemmas=lemmas, lexical=True).tokens


def bio_profile(
    influencers: InfluencerSet,
    users: Sequence[UserProfile],
    background: PriorTable,
    lemmas: Mapping[str, str] | None = None,
) -> list[ScoredWord]:
    """Log-odds of influencer bio words against all users' bios, highest first."""
    chosen = [u for u in users if u.user_id in influencers.users]
    ci = Counter()
    for u in chosen:
        ci.update(bio_tokens(u.bio, lemmas))
    if not ci:
        raise InfluenceError("all influencer bios are empty")
    cj = Counter()
    for u in users:
        cj.update(bio_tokens(u.bio, lemmas))
    scored = log_odds_dirichlet(
        CountTable(dict(ci), sum(ci.values())), CountTable(dict(cj), sum(cj.values())), background
    )
    return sorted(scored, key=lambda s: (-s.zscore, s.word))


def read_exclusions(path: str | Path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {s for s in (line.strip() for line in fh) if s and not s.startswith("#")}


def write_pagerank_series(series: PageRankSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "user", "pr"])
        for row, day in zip(series.matrix, series.days):
            for i in np.flatnonzero(row > 0):
                w.writerow([day, series.users[i], repr(float(row[i]))])


def write_mpr(scores: Sequence[MprScore], selected: InfluencerSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "f1", "f2", "f3", "rank_f1", "rank_f2", "rank_f3", "selected"])
        for s in sorted(scores, key=lambda s: (s.rank_f1, s.user)):
            w.writerow(
                [s.user, repr(s.f1), repr(s.f2), repr(s.f3), s.rank_f1, s.rank_f2, s.rank_f3,
                 "true" if s.user in selected.users else "false"]
            )
