"""Two-corpus comparison: Dirichlet-smoothed log-odds z-scores and category composition shifts."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scipy.stats import norm

from .corpus import CATEGORIES, TweetRecord

ALPHA_FLOOR = 0.01


class LexShiftError(ValueError):
    pass


@dataclass(frozen=True)
class CountTable:
    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise LexShiftError("negative count")
        if sum(self.counts.values()) != self.total:
            raise LexShiftError("total does not match the sum of counts")

    @classmethod
    def from_tokens(cls, streams: Iterable[Iterable[str]]) -> "CountTable":
        c = Counter()
        for toks in streams:
            c.update(toks)
        return cls(dict(c), sum(c.values()))


@dataclass(frozen=True)
class PriorTable:
    alpha: dict[str, float]
    alpha0: float
    floor: float = ALPHA_FLOOR

    def __post_init__(self):
        if any(a <= 0 for a in self.alpha.values()):
            raise LexShiftError("prior weights must be positive")
        if not math.isclose(self.alpha0, math.fsum(self.alpha.values()), rel_tol=1e-9):
            raise LexShiftError("alpha0 must equal the sum of alpha")

    @classmethod
    def uniform(cls, vocab: Iterable[str], value: float) -> "PriorTable":
        alpha = {w: float(value) for w in vocab}
        return cls(alpha, math.fsum(alpha.values()))

    def get(self, word: str) -> float:
        return self.alpha.get(word, self.floor)


@dataclass(frozen=True)
class ScoredWord:
    word: str
    zscore: float
    freq_i: int
    freq_j: int


@dataclass(frozen=True)
class CategoryShift:
    category: str
    pre_count: int
    post_count: int
    pre_total: int
    post_total: int
    pct_increase: float | None  # None: category absent before ("new category")
    p_value: float

    @property
    def share_pre(self) -> float:
        return self.pre_count / self.pre_total if self.pre_total else 0.0

    @property
    def share_post(self) -> float:
        return self.post_count / self.post_total if self.post_total else 0.0


def read_background(path: str | Path) -> dict[str, int]:
    freq = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise LexShiftError(f"{path}:{lineno}: expected word<TAB>count")
            freq[parts[0]] = freq.get(parts[0], 0) + int(parts[1])
    return freq


def build_prior(
    background: Mapping[str, int],
    vocab: Iterable[str],
    smoothing_scale: float | None = None,
    floor: float = ALPHA_FLOOR,
) -> PriorTable:
    """Informative prior over ``vocab`` scaled from background frequencies.

    alpha_w = scale * count_w / total; absent words get ``floor``. The scale
    defaults to the size of ``vocab``.
    """
    vocab = sorted(set(vocab))
    total = sum(background.values())
    scale = float(len(vocab)) if smoothing_scale is None else float(smoothing_scale)
    alpha = {}
    for w in vocab:
        c = background.get(w, 0)
        a = scale * c / total if total and c else 0.0
        alpha[w] = max(a, floor)
    return PriorTable(alpha, math.fsum(alpha.values()), floor)


def log_odds_dirichlet(ci: CountTable, cj: CountTable, prior: PriorTable) -> list[ScoredWord]:
    """z-scored log-odds ratio of every word in ``ci`` or ``cj``.

    Positive scores lean toward ``ci``. Output is sorted by word.
    """
    a0 = prior.alpha0
    out = []
    for w in sorted(ci.counts.keys() | cj.counts.keys()):
        a = prior.get(w)
        yi = ci.counts.get(w, 0)
        yj = cj.counts.get(w, 0)
        num_i, den_i = yi + a, ci.total + a0 - yi - a
        num_j, den_j = yj + a, cj.total + a0 - yj - a
        if den_i <= 0 or den_j <= 0:
            raise LexShiftError(f"degenerate prior for word {w!r}: nonpositive denominator")
        delta = (math.log(num_i) - math.log(den_i)) - (math.log(num_j) - math.log(den_j))
        var = 1.0 / num_i + 1.0 / num_j
        out.append(ScoredWord(w, delta / math.sqrt(var), yi, yj))
    return out


def representative_words(
    scored: Sequence[ScoredWord],
    k: int = 50,
    min_freq_frac: float = 0.01,
    side: str = "top",
    totals: tuple[int, int] | None = None,
) -> list[ScoredWord]:
    """The ``k`` most extreme words for one side, subject to a frequency floor.

    ``top`` ranks by descending z among words with freq_i >= frac * n_i;
    ``bottom`` by ascending z among words with freq_j >= frac * n_j. Totals
    default to the column sums of ``scored``.
    """
    if k <= 0:
        raise LexShiftError("k must be positive")
    if not 0.0 < min_freq_frac < 1.0:
        raise LexShiftError("min_freq_frac must lie in (0, 1)")
    if side not in ("top", "bottom"):
        raise LexShiftError(f"unknown side {side!r}")
    if totals is None:
        totals = (sum(s.freq_i for s in scored), sum(s.freq_j for s in scored))
    if side == "top":
        floor = min_freq_frac * totals[0]
        pool = [s for s in scored if s.freq_i >= floor]
        pool.sort(key=lambda s: (-s.zscore, s.word))
    else:
        floor = min_freq_frac * totals[1]
        pool = [s for s in scored if s.freq_j >= floor]
        pool.sort(key=lambda s: (s.zscore, s.word))
    return pool[:k]


def two_proportion_test(x1: int, n1: int, x2: int, n2: int) -> float:
    """Two-sided pooled two-proportion z-test with continuity correction.

    Equivalent to the Yates-corrected 2x2 chi-square test.
    """
    if n1 <= 0 or n2 <= 0:
        return 1.0
    p = (x1 + x2) / (n1 + n2)
    var = p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)
    if var == 0.0:
        return 1.0
    diff = abs(x2 / n2 - x1 / n1)
    corrected = max(0.0, diff - 0.5 * (1.0 / n1 + 1.0 / n2))
    z = corrected / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def composition_shift(
    pre: Sequence[TweetRecord], post: Sequence[TweetRecord]
) -> list[CategoryShift]:
    """Per-category share change between two labelled tweet sets."""
    unlabeled = [t.id for t in (*pre, *post) if t.category is None]
    if unlabeled:
        raise LexShiftError(f"tweets without category: {unlabeled[:20]}")
    cpre = Counter(t.category for t in pre)
    cpost = Counter(t.category for t in post)
    npre, npost = len(pre), len(post)
    out = []
    for cat in CATEGORIES:
        x1, x2 = cpre.get(cat, 0), cpost.get(cat, 0)
        if x1 == 0 and x2 == 0:
            continue
        if x1 == 0:
            pct = None
        else:
            s1 = x1 / npre
            s2 = x2 / npost if npost else 0.0
            pct = 100.0 * (s2 - s1) / s1
        out.append(CategoryShift(cat, x1, x2, npre, npost, pct, two_proportion_test(x1, npre, x2, npost)))
    return out


def write_scored_words(rows: Iterable[ScoredWord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["word", "zscore", "freq_i", "freq_j"])
        for s in rows:
            w.writerow([s.word, repr(s.zscore), s.freq_i, s.freq_j])


def write_category_shift(rows: Iterable[CategoryShift], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "pre_count", "post_count", "pre_total", "post_total", "pct_increase", "p_value"])
        for r in rows:
            pct = "new" if r.pct_increase is None else repr(r.pct_increase)
            w.writerow([r.category, r.pre_count, r.post_count, r.pre_total, r.post_total, pct, repr(r.p_value)])
