"""Tweet/user ingestion, validation, and the keyword / hate-score selection rules."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from datetime import date
from itertools import groupby
from pathlib import Path
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

KINDS = ("original", "retweet", "reply", "quote")
CATEGORIES = (
    "sexism",
    "racism",
    "disability",
    "sexual_orientation",
    "religion",
    "other_hate",
    "not_hate",
)
DEFAULT_HATE_THRESHOLD = 0.5
DEFAULT_MIN_HATEFUL = 3


class CorpusError(ValueError):
    """Raised for invalid records, inputs, or selection parameters."""


class RecordError(CorpusError):
    def __init__(self, message: str, lineno: int | None = None):
        self.reason = message
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class TweetRecord:
    id: str
    user_id: str
    day: int
    kind: str = "original"
    text: str = ""
    ref_id: str | None = None
    hate_score: float | None = None
    category: str | None = None

    def __post_init__(self):
        if not self.id or not self.user_id:
            raise RecordError("missing id or user_id")
        if isinstance(self.day, bool) or not isinstance(self.day, int) or self.day < 0:
            raise RecordError(f"day must be a nonnegative integer, got {self.day!r}")
        if self.kind not in KINDS:
            raise RecordError(f"unknown kind {self.kind!r}")
        if self.kind == "retweet" and not self.ref_id:
            raise RecordError("missing ref_id")
        if self.hate_score is not None and not 0.0 <= self.hate_score <= 1.0:
            raise RecordError(f"hate_score {self.hate_score!r} outside [0, 1]")
        if self.category is not None and self.category not in CATEGORIES:
            raise RecordError(f"unknown category {self.category!r}")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    followers: int = 0
    following: int = 0
    tweet_count: int = 0
    account_age_days: int = 0
    bio: str = ""
    bio_length: int = field(default=-1)

    def __post_init__(self):
        if not self.user_id:
            raise RecordError("missing user_id")
        if self.bio_length == -1:
            object.__setattr__(self, "bio_length", len(self.bio))
        if self.bio_length != len(self.bio):
            raise RecordError(
                f"bio_length {self.bio_length} != character count {len(self.bio)}"
            )
        for name in ("followers", "following", "tweet_count", "account_age_days"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise RecordError(f"{name} must be a nonnegative integer")


@dataclass(frozen=True)
class AnalysisWindow:
    start_day: date
    takeover_day_index: int
    end_day_index: int
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not 0 < self.takeover_day_index < self.end_day_index:
            raise CorpusError("need 0 < takeover_day_index < end_day_index")
        if not self.keywords:
            raise CorpusError("keyword list is empty")
        if any(k != k.lower() for k in self.keywords):
            raise CorpusError("keywords must be lowercase")
        if len(set(self.keywords)) != len(self.keywords):
            raise CorpusError("keywords must be deduplicated")

    @property
    def length(self) -> int:
        return self.end_day_index + 1


@dataclass(frozen=True)
class TokenStream:
    tweet_id: str
    tokens: tuple[str, ...]


# -- file IO ----------------------------------------------------------------

_TWEET_FIELDS = {f for f in TweetRecord.__dataclass_fields__}
_USER_FIELDS = {f for f in UserProfile.__dataclass_fields__}


def _parse_tweet(obj: Mapping) -> TweetRecord:
    missing = {"id", "user_id", "day"} - obj.keys()
    if missing:
        raise RecordError(f"missing field(s) {sorted(missing)}")
    kwargs = {k: obj[k] for k in _TWEET_FIELDS if k in obj}
    kwargs["id"] = str(kwargs["id"])
    kwargs["user_id"] = str(kwargs["user_id"])
    if kwargs.get("ref_id") is not None:
        kwargs["ref_id"] = str(kwargs["ref_id"])
    if kwargs.get("hate_score") is not None:
        kwargs["hate_score"] = float(kwargs["hate_score"])
    return TweetRecord(**kwargs)


def _parse_user(obj: Mapping) -> UserProfile:
    if "user_id" not in obj:
        raise RecordError("missing field(s) ['user_id']")
    kwargs = {k: obj[k] for k in _USER_FIELDS if k in obj}
    kwargs["user_id"] = str(kwargs["user_id"])
    return UserProfile(**kwargs)


def load_corpus(
    path: str | Path,
    schema: str = "tweets",
    *,
    strict: bool = False,
    window_length: int | None = None,
    rejects: list | None = None,
) -> list:
    """Read a JSONL file of tweets or user profiles.

    Malformed records are skipped and logged unless ``strict`` is set, in which
    case the first one aborts with a :class:`RecordError` carrying its line
    number. ``rejects``, if given, collects ``(lineno, message)`` pairs. A
    duplicate id always aborts.
    """
    if schema not in ("tweets", "users"):
        raise CorpusError(f"unknown schema {schema!r}")
    parse = _parse_tweet if schema == "tweets" else _parse_user
    key = "id" if schema == "tweets" else "user_id"
    out = []
    seen = set()
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RecordError(f"invalid JSON ({exc.msg})") from None
                if not isinstance(obj, dict):
                    raise RecordError("expected a JSON object")
                try:
                    rec = parse(obj)
                except TypeError as exc:
                    raise RecordError(str(exc)) from None
                if window_length is not None and schema == "tweets" and rec.day >= window_length:
                    raise RecordError(f"day {rec.day} outside window of {window_length} days")
            except RecordError as exc:
                exc = RecordError(exc.reason, lineno)
                if strict:
                    raise exc from None
                skipped += 1
                log.warning("%s: skipping record: %s", path, exc)
                if rejects is not None:
                    rejects.append((lineno, str(exc)))
                continue
            ident = getattr(rec, key)
            if ident in seen:
                raise RecordError(f"duplicate {key} {ident!r}", lineno)
            seen.add(ident)
            out.append(rec)
    if skipped:
        log.warning("%s: skipped %d malformed record(s)", path, skipped)
    return out


def _record_dict(rec) -> dict:
    d = asdict(rec)
    if isinstance(rec, TweetRecord):
        return {k: v for k, v in d.items() if v is not None}
    return d


def dump_corpus(records: Iterable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_dict(rec), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_lines(path: str | Path) -> list[str]:
    """Non-empty stripped lines of a UTF-8 text file (keywords, exclusions)."""
    with open(path, encoding="utf-8") as fh:
        return [s for s in (line.strip() for line in fh) if s and not s.startswith("#")]


def load_keywords(path: str | Path) -> list[str]:
    words = read_lines(path)
    bad = [w for w in words if w != w.lower()]
    if bad:
        raise CorpusError(f"keywords must be lowercase: {bad[:5]}")
    return list(dict.fromkeys(words))


def load_lemmas(path: str | Path) -> dict[str, str]:
    lemmas = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise RecordError("expected token<TAB>lemma", lineno)
            lemmas[parts[0].strip().lower()] = parts[1].strip().lower()
    return lemmas


# -- preprocessing ------------------------------------------------------------

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_CAMEL = re.compile(r"(?<=[a-z])(?=[A-Z])")


def _letter_runs(text: str) -> list[str]:
    # str.isalpha rather than a regex class: \w admits superscripts and other numerics
    return ["".join(g) for alpha, g in groupby(text, str.isalpha) if alpha]
MIN_LEXICAL_LEN = 3


def preprocess(
    text: str,
    mode: str = "tweet",
    lemmas: Mapping[str, str] | None = None,
    lexical: bool = False,
    tweet_id: str = "",
) -> TokenStream:
    """Tokenize ``text`` into lowercase alphabetic tokens.

    Mentions and URLs go first, then everything non-alphabetic acts as a
    separator. ``mode="bio"`` also splits CamelCase runs such as hashtag
    slogans. ``lexical=True`` applies the lemma dictionary and drops tokens
    shorter than three characters.
    """
    if mode not in ("tweet", "bio"):
        raise CorpusError(f"unknown preprocess mode {mode!r}")
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    if mode == "bio":
        text = _CAMEL.sub(" ", text)
    tokens = _letter_runs(text.lower())
    if lexical:
        if lemmas:
            tokens = [lemmas.get(t, t) for t in tokens]
        tokens = [t for t in tokens if len(t) >= MIN_LEXICAL_LEN]
    return TokenStream(tweet_id, tuple(tokens))


def tokenize(text: str) -> tuple[str, ...]:
    return preprocess(text).tokens


# -- selection rules ------------------------------------------------------------


def _keyword_patterns(keywords: Sequence[str]) -> list[tuple[str, tuple[str, ...]]]:
    pats = []
    for kw in keywords:
        toks = tokenize(kw)
        if toks:
            pats.append((kw, toks))
    return pats


def _matched_keywords(tokens: tuple[str, ...], patterns) -> set[str]:
    present = set(tokens)
    hits = set()
    for kw, toks in patterns:
        if len(toks) == 1:
            if toks[0] in present:
                hits.add(kw)
        elif toks[0] in present:
            n = len(toks)
            if any(tokens[i : i + n] == toks for i in range(len(tokens) - n + 1)):
                hits.add(kw)
    return hits


def keyword_filter(tweets: Sequence[TweetRecord], keywords: Sequence[str]) -> list[TweetRecord]:
    """Tweets containing at least one keyword as a whole token (or token run)."""
    if not keywords:
        raise CorpusError("keyword list is empty")
    patterns = _keyword_patterns(keywords)
    return [t for t in tweets if _matched_keywords(tokenize(t.text), patterns)]


def fallback_scorer(tweets: Sequence[TweetRecord], keywords: Sequence[str]) -> list[TweetRecord]:
    """Keyword-count stand-in for a hate classifier: ``min(1, k / 2)``."""
    patterns = _keyword_patterns(keywords)
    out = []
    for t in tweets:
        k = len(_matched_keywords(tokenize(t.text), patterns))
        out.append(replace(t, hate_score=min(1.0, k / 2)))
    return out


def hate_threshold_filter(
    tweets: Sequence[TweetRecord], threshold: float = DEFAULT_HATE_THRESHOLD
) -> list[TweetRecord]:
    if not 0.0 < threshold < 1.0:
        raise CorpusError("threshold must lie in (0, 1)")
    missing = [t.id for t in tweets if t.hate_score is None]
    if missing:
        raise CorpusError(f"tweets without hate_score: {missing[:20]}")
    return [t for t in tweets if t.hate_score >= threshold]


def key_contributors(
    tweets: Sequence[TweetRecord], min_hateful: int = DEFAULT_MIN_HATEFUL
) -> set[str]:
    """Users with at least ``min_hateful`` tweets in an already hate-filtered set."""
    if min_hateful < 1:
        raise CorpusError("min_hateful must be >= 1")
    counts = Counter(t.user_id for t in tweets)
    return {u for u, c in counts.items() if c >= min_hateful}
