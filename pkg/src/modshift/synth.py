"""Two-regime synthetic retweet corpus with planted bridge users and lexical shifts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import TweetRecord, UserProfile, dump_corpus

KEYWORDS = ("slura", "slurb", "slurc", "slurd", "commie", "groomer")
TOPIC_WORDS = (
    ("election", "ballot", "vote", "senate", "campaign", "poll"),
    ("border", "immigrant", "wall", "visa", "asylum", "customs"),
    ("church", "faith", "prayer", "bible", "mosque", "temple"),
    ("school", "teacher", "parent", "curriculum", "library", "classroom"),
    ("police", "crime", "court", "judge", "prison", "sheriff"),
    ("football", "coach", "stadium", "league", "season", "trophy"),
    ("media", "reporter", "network", "anchor", "headline", "editor"),
    ("economy", "inflation", "price", "wage", "market", "tax"),
)
FILLER = ("people", "today", "really", "think", "always", "never", "again", "every", "thing", "world")
PRE_WORDS = ("boring", "whatever", "meh")
POST_WORDS = ("unleashed", "finally", "unbanned")
PLANTED_PAIRS = (("liberal", "commie"),)
PLANT_CONTEXTS = (
    ("policy", "healthcare", "climate", "student", "union"),
    ("soviet", "marx", "regime", "stalin", "propaganda"),
)
BIO_WORDS = ("patriot", "mom", "dad", "gamer", "veteran", "teacher", "writer", "freedom", "coffee", "dog")
BIO_PLANT = "maga"


@dataclass(frozen=True)
class SynthSpec:
    n_users: int = 2000
    days: int = 63
    takeover_day: int = 31
    pre_edge_rate: float = 10.0
    post_edge_rate: float = 27.0
    n_planted_bridges: int = 20
    community_count: int = 8
    seed: int = 0
    # probability that an in-community edge brings in a brand-new retweeter / author
    new_src_prob: float = 0.6
    new_dst_prob_pre: float = 0.35
    new_dst_prob_post: float = 0.2
    # share of post-takeover edges routed through bridges
    bridge_share: float = 0.35
    bridge_amplify: float = 0.7
    filler_tweets: int = 3
    noise_users: int = 200
    pre_words: tuple = PRE_WORDS
    post_words: tuple = POST_WORDS
    planted_pairs: tuple = PLANTED_PAIRS

    def __post_init__(self):
        if not 0 < self.takeover_day < self.days - 1:
            raise ValueError("takeover_day must lie strictly inside the window")
        if not 0 <= self.n_planted_bridges < self.n_users:
            raise ValueError("need 0 <= n_planted_bridges < n_users")
        if self.pre_edge_rate < 0 or self.post_edge_rate < 0:
            raise ValueError("edge rates must be nonnegative")
        if self.community_count < 1:
            raise ValueError("need at least one community")


def _quota(rate: float, start: int, stop: int) -> dict[int, int]:
    # exact per-day realisation of a fractional rate
    return {d: int(np.floor(rate * (d - start + 1)) - np.floor(rate * (d - start))) for d in range(start, stop)}


@dataclass
class SynthBundle:
    tweets: list[TweetRecord]
    users: list[UserProfile]
    truth: dict
    edges: list[tuple[str, str, int]] = field(default_factory=list)


class _Builder:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        n = spec.n_users
        self.ids = [f"u{i:05d}" for i in range(n)]
        self.community = self.rng.integers(spec.community_count, size=n)
        perm = self.rng.permutation(n)
        self.bridges = sorted(int(i) for i in perm[: spec.n_planted_bridges])
        self.bridge_set = set(self.bridges)
        ordinary = perm[spec.n_planted_bridges :]
        self.pool = {c: [int(i) for i in ordinary if self.community[i] == c] for c in range(spec.community_count)}
        for c in self.pool:
            self.rng.shuffle(self.pool[c])
        self.active = {c: [] for c in range(spec.community_count)}
        self.active_set = set()
        self.indeg = np.zeros(n)
        self.pairs = set()
        self.edges = []

    def _activate(self, c):
        if not self.pool[c]:
            return None
        u = self.pool[c].pop()
        self.active[c].append(u)
        self.active_set.add(u)
        return u

    def _existing(self, c, weighted):
        act = self.active[c]
        if not act:
            return None
        if weighted:
            w = self.indeg[act] + 1.0
            return act[int(np.searchsorted(np.cumsum(w), self.rng.random() * w.sum(), side="right"))]
        return act[int(self.rng.integers(len(act)))]

    def _pick_src(self, c):
        if self.rng.random() < self.spec.new_src_prob or not self.active[c]:
            u = self._activate(c)
            if u is not None:
                return u
        return self._existing(c, weighted=False)

    def _pick_dst(self, c, post):
        p_new = self.spec.new_dst_prob_post if post else self.spec.new_dst_prob_pre
        if self.rng.random() < p_new or not self.active[c]:
            u = self._activate(c)
            if u is not None:
                return u
        return self._existing(c, weighted=True)

    def _add(self, s, d, day):
        if s is None or d is None or s == d or (s, d) in self.pairs:
            return False
        self.pairs.add((s, d))
        self.indeg[d] += 1
        self.edges.append((s, d, day))
        return True

    def edge(self, day, post):
        spec = self.spec
        for _ in range(20):
            c = int(self.rng.integers(spec.community_count))
            if post and self.bridges and self.rng.random() < spec.bridge_share:
                b = self.bridges[int(self.rng.integers(len(self.bridges)))]
                # bridges are retweeted from every community and retweet across them
                if self.rng.random() < 0.75:
                    # established accounts from any community amplify the bridge
                    src = self._existing(c, weighted=True) if self.rng.random() < spec.bridge_amplify else self._pick_src(c)
                    ok = self._add(src, b, day)
                else:
                    ok = self._add(b, self._existing(c, weighted=True), day)
                if ok:
                    self.active_set.add(b)
                    return
            elif self._add(self._pick_src(c), self._pick_dst(c, post), day):
                return

    def run(self):
        spec = self.spec
        quota = _quota(spec.pre_edge_rate, 0, spec.takeover_day)
        quota.update(_quota(spec.post_edge_rate, spec.takeover_day, spec.days))
        for day in range(spec.days):
            for _ in range(quota[day]):
                self.edge(day, day >= spec.takeover_day)
        return self.edges


class _Text:
    def __init__(self, spec: SynthSpec, rng):
        self.spec = spec
        self.rng = rng

    def _pick(self, words, k):
        return [words[int(i)] for i in self.rng.integers(len(words), size=k)]

    def tweet(self, community: int, post: bool, hateful: bool) -> str:
        spec, rng = self.spec, self.rng
        planted = spec.planted_pairs and rng.random() < 0.3
        if planted:
            toks = self._planted(post)
        else:
            topic = TOPIC_WORDS[community % len(TOPIC_WORDS)]
            toks = self._pick(topic, 3) + self._pick(FILLER, 2)
        toks += self._pick(spec.post_words if post else spec.pre_words, 1)
        if hateful:
            toks += self._pick(KEYWORDS[:4], 1 + int(rng.random() < 0.4))
        rng.shuffle(toks)
        if rng.random() < 0.2:
            toks.append("https://t.co/" + "".join(self._pick("abcdefgh", 6)))
        if rng.random() < 0.2:
            toks.insert(0, "@someone")
        return " ".join(toks)

    def _planted(self, post: bool) -> list[str]:
        # before the takeover each planted word keeps its own company; after it
        # the pair co-occurs and the two context sets mix
        pairs = self.spec.planted_pairs
        i = int(self.rng.integers(len(pairs)))
        a, b = pairs[i]
        ctx_a, ctx_b = PLANT_CONTEXTS[(2 * i) % len(PLANT_CONTEXTS)], PLANT_CONTEXTS[(2 * i + 1) % len(PLANT_CONTEXTS)]
        r = self.rng.random()
        if post and r < 0.6:
            return [a, b] + self._pick(ctx_a, 2) + self._pick(ctx_b, 2)
        if r < 0.8:
            return [a] + self._pick(ctx_a, 4)
        return [b] + self._pick(ctx_b, 4)


def _categories(post: bool):
    pre = {"racism": 0.25, "sexism": 0.25, "sexual_orientation": 0.15, "religion": 0.1,
           "disability": 0.05, "other_hate": 0.1, "not_hate": 0.1}
    if post:
        pre = {**pre, "racism": 0.35, "sexual_orientation": 0.2, "not_hate": 0.0}
    total = sum(pre.values())
    return list(pre), np.array(list(pre.values())) / total


def synthesize(spec: SynthSpec) -> SynthBundle:
    b = _Builder(spec)
    edges = b.run()
    rng = np.random.default_rng([spec.seed, 1])
    text = _Text(spec, rng)
    ids = b.ids
    tweets: list[TweetRecord] = []
    counter = [0]

    def new_id():
        counter[0] += 1
        return f"t{counter[0]:07d}"

    def hateful(user, day):
        post = day >= spec.takeover_day
        cats, probs = _categories(post)
        return TweetRecord(
            new_id(), ids[user], day, "original", text.tweet(int(b.community[user]), post, True),
            hate_score=round(float(rng.uniform(0.5, 1.0)), 4),
            category=cats[int(rng.choice(len(cats), p=probs))],
        )

    # every network user is a key contributor: filler hateful tweets
    for u in range(spec.n_users):
        for _ in range(spec.filler_tweets):
            tweets.append(hateful(u, int(rng.integers(spec.days))))
        if rng.random() < 0.5:
            day = int(rng.integers(spec.days))
            tweets.append(TweetRecord(new_id(), ids[u], day, "original",
                                      text.tweet(int(b.community[u]), day >= spec.takeover_day, False),
                                      hate_score=round(float(rng.uniform(0.0, 0.3)), 4), category="not_hate"))
    originals = {}
    for s, d, day in edges:
        key = (d, day)
        if key not in originals:
            t = hateful(d, day)
            originals[key] = t
            tweets.append(t)
        lag = int(rng.random() < 0.3)
        ref = originals[key]
        tweets.append(TweetRecord(new_id(), ids[s], min(day + lag, spec.days - 1), "retweet",
                                  "RT " + ref.text, ref_id=ref.id, hate_score=ref.hate_score))
    # replies/quotes sprinkled in, plus noise users below the key-contributor bar
    for _ in range(spec.n_users // 4):
        u = int(rng.integers(spec.n_users))
        day = int(rng.integers(spec.days))
        kind = "reply" if rng.random() < 0.5 else "quote"
        target = tweets[int(rng.integers(len(tweets)))]
        tweets.append(TweetRecord(new_id(), ids[u], day, kind,
                                  text.tweet(int(b.community[u]), day >= spec.takeover_day, rng.random() < 0.3),
                                  ref_id=target.id, hate_score=round(float(rng.uniform(0.0, 0.4)), 4)))
    noise_ids = [f"n{i:05d}" for i in range(spec.noise_users)]
    for nid in noise_ids:
        for _ in range(int(rng.integers(1, 3))):
            day = int(rng.integers(spec.days))
            post = day >= spec.takeover_day
            tweets.append(TweetRecord(new_id(), nid, day, "original",
                                      text.tweet(int(rng.integers(spec.community_count)), post, True),
                                      hate_score=round(float(rng.uniform(0.5, 1.0)), 4), category="racism"))

    users = []
    for i, uid in enumerate(ids):
        bio = text._pick(BIO_WORDS, int(rng.integers(1, 4)))
        if (i in b.bridge_set and rng.random() < 0.9) or rng.random() < 0.02:
            bio.append(BIO_PLANT.upper())
        if rng.random() < 0.1:
            bio.append("SelfGovernance")
        rng.shuffle(bio)
        bio = " ".join(bio)
        users.append(UserProfile(
            uid,
            followers=int(np.exp(3.0 + 0.8 * np.log1p(b.indeg[i]) + rng.normal(0, 0.8))),
            following=int(np.exp(4.0 + rng.normal(0, 0.7))),
            tweet_count=int(rng.integers(10, 5000)),
            account_age_days=int(rng.integers(30, 4000)),
            bio=bio,
        ))
    for nid in noise_ids:
        users.append(UserProfile(nid, followers=int(rng.integers(0, 200)), following=int(rng.integers(0, 500)),
                                 tweet_count=int(rng.integers(1, 300)), account_age_days=int(rng.integers(1, 2000)),
                                 bio=" ".join(text._pick(BIO_WORDS, 2))))

    truth = {
        "spec": asdict(spec),
        "planted_bridges": [ids[i] for i in b.bridges],
        "regime_rates": {"pre_edge_rate": spec.pre_edge_rate, "post_edge_rate": spec.post_edge_rate,
                         "expected_influx_pct_change": (100.0 * (spec.post_edge_rate - spec.pre_edge_rate)
                                                        / spec.pre_edge_rate if spec.pre_edge_rate else None)},
        "planted_lexical_shifts": {"pre": list(spec.pre_words), "post": list(spec.post_words)},
        "planted_pairs": [list(p) for p in spec.planted_pairs],
        "planted_bio_word": BIO_PLANT,
        "n_edges": len(edges),
    }
    return SynthBundle(tweets, users, truth, [(ids[s], ids[d], day) for s, d, day in edges])


LEMMAS = {"immigrants": "immigrant", "teachers": "teacher", "prices": "price", "votes": "vote",
          "parents": "parent", "judges": "judge", "voting": "vote", "prayed": "prayer"}
DEFAULT_PAIRS = (("liberal", "commie"), ("election", "ballot"), ("liberal policy", "soviet regime"))


def background_counts() -> dict[str, int]:
    words = sorted({w for grp in TOPIC_WORDS for w in grp} | set(FILLER) | set(PRE_WORDS) | set(POST_WORDS)
                   | set(BIO_WORDS) | {w for grp in PLANT_CONTEXTS for w in grp}
                   | {"liberal", "commie", "maga", "self", "governance"})
    # deterministic Zipf-like reference frequencies
    return {w: 1000000 // (i + 1) for i, w in enumerate(words)}


def write_bundle(spec: SynthSpec, out: str | Path) -> Path:
    """Write tweets/users JSONL, ground truth, support files, and a pipeline config."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = synthesize(spec)
    dump_corpus(bundle.tweets, out / "tweets.jsonl")
    dump_corpus(bundle.users, out / "users.jsonl")
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(bundle.truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    (out / "keywords.txt").write_text("\n".join(KEYWORDS[:4]) + "\n", encoding="utf-8")
    (out / "lemmas.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in sorted(LEMMAS.items())), encoding="utf-8")
    (out / "background_freq.tsv").write_text(
        "".join(f"{w}\t{c}\n" for w, c in sorted(background_counts().items())), encoding="utf-8")
    (out / "pairs.csv").write_text("topic,keyword\n" + "".join(f"{a},{b}\n" for a, b in DEFAULT_PAIRS),
                                   encoding="utf-8")
    topk = max(spec.n_planted_bridges, int(round(1000 * spec.n_users / 6168)))
    (out / "pipeline.ini").write_text(
        "[paths]\n"
        "tweets = tweets.jsonl\nusers = users.jsonl\nkeywords = keywords.txt\nlemmas = lemmas.tsv\n"
        "background = background_freq.tsv\npairs = pairs.csv\n\n"
        "[window]\nstart_date = 2022-09-27\n"
        f"takeover_index = {spec.takeover_day}\nend_index = {spec.days - 1}\n\n"
        f"[thresholds]\nhate = 0.5\nmin_hateful = 3\ntopk = {topk}\n\n"
        f"[run]\nseed = {spec.seed}\n",
        encoding="utf-8",
    )
    return out
