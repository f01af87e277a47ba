import logging

import pytest
from hypothesis import given, strategies as st

from modshift.corpus import (
    AnalysisWindow,
    CorpusError,
    RecordError,
    TweetRecord,
    UserProfile,
    dump_corpus,
    fallback_scorer,
    hate_threshold_filter,
    key_contributors,
    keyword_filter,
    load_corpus,
    load_lemmas,
    preprocess,
    tokenize,
)

from conftest import write_jsonl


def test_load_empty_file(tmp_path):
    assert load_corpus(write_jsonl(tmp_path / "t.jsonl", []), "tweets") == []


def test_load_single_original(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [{"id": "1", "user_id": "a", "day": 0, "kind": "original", "text": "hi"}])
    out = load_corpus(p, "tweets")
    assert out == [TweetRecord("1", "a", 0, "original", "hi")]


def test_retweet_without_ref_is_rejected_with_line_number(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [
        {"id": "1", "user_id": "a", "day": 0, "kind": "original", "text": "hi"},
        {"id": "2", "user_id": "b", "day": 1, "kind": "retweet", "text": "RT hi"},
    ])
    with pytest.raises(RecordError, match="missing ref_id") as exc:
        load_corpus(p, "tweets", strict=True)
    assert exc.value.lineno == 2


def test_skip_and_log_policy(tmp_path, caplog):
    p = write_jsonl(tmp_path / "t.jsonl", [
        "{not json",
        {"id": "1", "user_id": "a", "day": 0},
        {"id": "2", "user_id": "a", "day": 0, "hate_score": 1.5},
        {"id": "3", "user_id": "a", "day": 9},
    ])
    rejects = []
    with caplog.at_level(logging.WARNING):
        out = load_corpus(p, "tweets", window_length=5, rejects=rejects)
    assert [t.id for t in out] == ["1"]
    assert [ln for ln, _ in rejects] == [1, 3, 4]
    assert "skipped 3 malformed" in caplog.text


def test_duplicate_id_aborts_even_when_lenient(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [{"id": "1", "user_id": "a", "day": 0}] * 2)
    with pytest.raises(RecordError, match="duplicate"):
        load_corpus(p, "tweets")


def test_user_profiles_and_roundtrip(tmp_path):
    users = [UserProfile("a", 10, 2, 30, 400, "hello world"), UserProfile("b", bio="")]
    dump_corpus(users, tmp_path / "u.jsonl")
    back = load_corpus(tmp_path / "u.jsonl", "users")
    assert back == users
    assert back[0].bio_length == 11


def test_tweet_roundtrip(tmp_path, tweet):
    tweets = [tweet("1", text="x"), tweet("2", kind="retweet", ref_id="1", hate_score=0.5, category="racism")]
    dump_corpus(tweets, tmp_path / "t.jsonl")
    assert load_corpus(tmp_path / "t.jsonl") == tweets


def test_bio_length_must_match():
    with pytest.raises(RecordError):
        UserProfile("a", bio="abc", bio_length=2)


def test_window_invariants():
    from datetime import date

    w = AnalysisWindow(date(2022, 9, 27), 31, 62, ("slura",))
    assert w.length == 63
    with pytest.raises(CorpusError):
        AnalysisWindow(date(2022, 9, 27), 62, 62, ("slura",))
    with pytest.raises(CorpusError):
        AnalysisWindow(date(2022, 9, 27), 3, 62, ("SlurA",))


# -- keyword filter -------------------------------------------------------------


def test_keyword_filter_empty_input():
    assert keyword_filter([], ["slura"]) == []


def test_keyword_filter_case_folding(tweet):
    t = tweet(text="x slurA y")
    assert keyword_filter([t], ["slura"]) == [t]


def test_keyword_filter_whole_token(tweet):
    assert keyword_filter([tweet(text="slurAB")], ["slura"]) == []


def test_keyword_filter_multiword_keyword(tweet):
    a, b = tweet("1", text="a Half-Breed b"), tweet("2", text="half of a breed")
    assert keyword_filter([a, b], ["half-breed"]) == [a]


def test_keyword_filter_rejects_empty_keywords(tweet):
    with pytest.raises(CorpusError):
        keyword_filter([tweet()], [])


words = st.sampled_from(["slura", "slurb", "cat", "dog", "SLURA", "x1", "@slura", "slurab"])
texts = st.lists(words, max_size=6).map(" ".join)


@given(st.lists(texts, max_size=12))
def test_keyword_filter_subset_idempotent_and_matches_oracle(txts):
    tweets = [TweetRecord(str(i), "u", 0, text=t) for i, t in enumerate(txts)]
    once = keyword_filter(tweets, ["slura"])
    assert keyword_filter(once, ["slura"]) == once
    assert all(t in tweets for t in once)
    # oracle: tokenize, then set membership
    assert once == [t for t in tweets if "slura" in set(tokenize(t.text))]


# -- hate scores ----------------------------------------------------------------


def test_threshold_inclusive_boundary(tweet):
    assert len(hate_threshold_filter([tweet(hate_score=0.5)], 0.5)) == 1
    assert hate_threshold_filter([tweet(hate_score=0.49)], 0.5) == []


def test_threshold_counts(tweet):
    ts = [tweet(str(i), hate_score=s) for i, s in enumerate([0.2, 0.5, 0.9])]
    assert len(hate_threshold_filter(ts, 0.5)) == 2


def test_threshold_requires_scores(tweet):
    with pytest.raises(CorpusError, match="t9"):
        hate_threshold_filter([tweet("t9")], 0.5)


@given(st.lists(st.floats(0, 1), max_size=20), st.floats(0.01, 0.98), st.floats(0.0, 0.5))
def test_threshold_monotone(scores, lo, bump):
    hi = min(0.99, lo + bump)
    ts = [TweetRecord(str(i), "u", 0, hate_score=s) for i, s in enumerate(scores)]
    assert set(hate_threshold_filter(ts, hi)) <= set(hate_threshold_filter(ts, lo))


@pytest.mark.parametrize("text,score", [("nothing here", 0.0), ("x slura", 0.5), ("slura slura", 0.5),
                                        ("slura slurb slurc", 1.0)])
def test_fallback_scorer(tweet, text, score):
    (out,) = fallback_scorer([tweet(text=text)], ["slura", "slurb", "slurc"])
    assert out.hate_score == score


def test_key_contributors(tweet):
    ts = [tweet(f"a{i}", user="a") for i in range(3)] + [tweet(f"b{i}", user="b") for i in range(2)]
    assert key_contributors(ts, 3) == {"a"}
    assert key_contributors([], 3) == set()
    with pytest.raises(CorpusError):
        key_contributors(ts, 0)


@given(st.lists(st.sampled_from("abcde"), max_size=30), st.integers(1, 5))
def test_key_contributors_nested(users, m):
    ts = [TweetRecord(str(i), u, 0) for i, u in enumerate(users)]
    assert key_contributors(ts, m + 1) <= key_contributors(ts, m)


# -- preprocessing ----------------------------------------------------------------


def test_preprocess_strips_mentions_and_urls():
    assert preprocess("@u http://x.co Hi").tokens == ("hi",)


def test_preprocess_lexical_with_lemmas():
    out = preprocess("Cats RUNNING!!", lemmas={"cats": "cat", "running": "run"}, lexical=True)
    assert out.tokens == ("cat", "run")


def test_preprocess_length_floor():
    assert preprocess("a b c", lexical=True).tokens == ()


def test_bio_mode_splits_camel_case():
    assert preprocess("#SelfGovernance | MAGA", mode="bio").tokens == ("self", "governance", "maga")


@given(st.text(max_size=60))
def test_preprocess_idempotent(text):
    lem = {"cats": "cat", "running": "run"}
    for lexical in (False, True):
        toks = preprocess(text, lemmas=lem, lexical=lexical).tokens
        assert preprocess(" ".join(toks), lemmas=lem, lexical=lexical).tokens == toks
        assert all(t.isalpha() and t == t.lower() for t in toks)


def test_load_lemmas(tmp_path):
    p = tmp_path / "l.tsv"
    p.write_text("cats\tcat\nRan\trun\n", encoding="utf-8")
    assert load_lemmas(p) == {"cats": "cat", "ran": "run"}
