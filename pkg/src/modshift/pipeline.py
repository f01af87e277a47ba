"""Config-driven orchestration of the analysis stages and the report bundle."""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import platform
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import corpus as C
from . import earlydetect as E
from . import embedshift as W
from . import influence as I
from . import lexshift as L
from . import tempograph as G

log = logging.getLogger(__name__)

STAGES = ("ingest", "lexshift", "embedshift", "graph", "mpr", "earlydetect")
DEPENDS = {
    "ingest": (),
    "lexshift": ("ingest",),
    "embedshift": ("ingest",),
    "graph": ("ingest",),
    "mpr": ("graph",),
    "earlydetect": ("mpr",),
}
EXIT_OK, EXIT_INVALID, EXIT_STAGE, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    tweets: Path
    users: Path
    keywords: Path
    lemmas: Path | None = None
    background: Path | None = None
    embeddings: Path | None = None
    pairs: Path | None = None
    exclusions: Path | None = None
    start_date: date = date(2022, 9, 27)
    takeover_index: int = 31
    end_index: int = 62
    hate_threshold: float = C.DEFAULT_HATE_THRESHOLD
    min_hateful: int = C.DEFAULT_MIN_HATEFUL
    topk: int = I.DEFAULT_TOPK
    representative_k: int = 50
    min_freq_frac: float = 0.01
    stages: dict = field(default_factory=lambda: {s: True for s in STAGES})
    graph_mode: str = "retweet_only"
    directed: bool = True
    forest_fire_nodes: int = 1000
    bucket_days: int = 1
    p_forward: float = 0.7
    damping: float = I.DAMPING
    tolerance: float = I.TOLERANCE
    max_iter: int = I.MAX_ITER
    f3_disjoint: bool = False
    sgns: dict = field(default_factory=dict)
    rounds: int = 50
    max_depth: int = 3
    train_fraction: float = 0.8
    seed: int = 0
    jobs: int = 1
    strict: bool = False
    source: Path | None = None

    def validate(self) -> None:
        if not 0 < self.takeover_index < self.end_index:
            raise ConfigError("takeover_index must lie strictly inside the window")
        for name in ("tweets", "users", "keywords", "lemmas", "background", "embeddings", "pairs", "exclusions"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} file not found: {p}")
        if not 0 < self.hate_threshold < 1:
            raise ConfigError("hate threshold must lie in (0, 1)")
        if self.min_hateful < 1 or self.topk < 1:
            raise ConfigError("min_hateful and topk must be >= 1")
        if self.bucket_days < 1:
            raise ConfigError("bucket_days must be >= 1")
        if not 0 < self.takeover_index // self.bucket_days < self.end_index // self.bucket_days:
            raise ConfigError("takeover must fall strictly inside the bucketed window")
        if self.graph_mode not in G.INTERACTION_KINDS:
            raise ConfigError(f"unknown graph mode {self.graph_mode!r}")
        W.SGNSConfig(**self.sgns)

    def echo(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, (Path, date)):
                d[k] = str(v)
        d.pop("source")
        return d


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


_SGNS_TYPES = {"dim": int, "window": int, "negatives": int, "epochs": int, "min_count": int,
               "subsample": float, "lr": float, "shuffle": _bool}


def load_config(path: str | Path) -> PipelineConfig:
    """Parse an INI-style ``key = value`` config; relative paths resolve against its folder."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    base = path.parent

    def p(key, required=False):
        val = cp.get("paths", key, fallback=None)
        if not val:
            if required:
                raise ConfigError(f"[paths] {key} is required")
            return None
        q = Path(val)
        return q if q.is_absolute() else base / q

    try:
        cfg = PipelineConfig(
            tweets=p("tweets", True), users=p("users", True), keywords=p("keywords", True),
            lemmas=p("lemmas"), background=p("background"), embeddings=p("embeddings"),
            pairs=p("pairs"), exclusions=p("exclusions"), source=path,
        )
        if cp.has_section("window"):
            w = cp["window"]
            cfg.start_date = date.fromisoformat(w.get("start_date", str(cfg.start_date)))
            cfg.takeover_index = w.getint("takeover_index", cfg.takeover_index)
            cfg.end_index = w.getint("end_index", cfg.end_index)
        if cp.has_section("thresholds"):
            t = cp["thresholds"]
            cfg.hate_threshold = t.getfloat("hate", cfg.hate_threshold)
            cfg.min_hateful = t.getint("min_hateful", cfg.min_hateful)
            cfg.topk = t.getint("topk", cfg.topk)
            cfg.representative_k = t.getint("representative_k", cfg.representative_k)
            cfg.min_freq_frac = t.getfloat("min_freq_frac", cfg.min_freq_frac)
        if cp.has_section("stages"):
            for s in STAGES:
                if s in cp["stages"]:
                    cfg.stages[s] = _bool(cp["stages"][s])
        if cp.has_section("graph"):
            g = cp["graph"]
            cfg.graph_mode = g.get("mode", cfg.graph_mode)
            cfg.directed = _bool(g.get("directed", str(cfg.directed)))
            cfg.forest_fire_nodes = g.getint("forest_fire_nodes", cfg.forest_fire_nodes)
            cfg.bucket_days = g.getint("bucket_days", cfg.bucket_days)
            cfg.p_forward = g.getfloat("p_forward", cfg.p_forward)
        if cp.has_section("pagerank"):
            r = cp["pagerank"]
            cfg.damping = r.getfloat("damping", cfg.damping)
            cfg.tolerance = r.getfloat("tolerance", cfg.tolerance)
            cfg.max_iter = r.getint("max_iter", cfg.max_iter)
            cfg.f3_disjoint = _bool(r.get("f3_disjoint", "false"))
        if cp.has_section("embedshift"):
            for k, v in cp["embedshift"].items():
                if k not in _SGNS_TYPES:
                    raise ConfigError(f"unknown [embedshift] key {k!r}")
                cfg.sgns[k] = _SGNS_TYPES[k](v)
        if cp.has_section("earlydetect"):
            e = cp["earlydetect"]
            cfg.rounds = e.getint("rounds", cfg.rounds)
            cfg.max_depth = e.getint("max_depth", cfg.max_depth)
            cfg.train_fraction = e.getfloat("train_fraction", cfg.train_fraction)
        if cp.has_section("run"):
            cfg.seed = cp["run"].getint("seed", cfg.seed)
            cfg.jobs = cp["run"].getint("jobs", cfg.jobs)
            cfg.strict = _bool(cp["run"].get("strict", "false"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return cfg


def substream_seed(root: int, name: str) -> int:
    """Stable per-stage seed derived from the root seed and a stage name."""
    ss = np.random.SeedSequence([root, zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _clean(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


class Run:
    """State shared between stages of one pipeline run."""

    def __init__(self, cfg: PipelineConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.state: dict = {}

    def dir(self, stage: str) -> Path:
        d = self.out / stage
        d.mkdir(parents=True, exist_ok=True)
        return d

    # -- stages -------------------------------------------------------------------

    def ingest(self):
        cfg = self.cfg
        rejects: list = []
        tweets = C.load_corpus(cfg.tweets, "tweets", strict=cfg.strict,
                               window_length=cfg.end_index + 1, rejects=rejects)
        users = C.load_corpus(cfg.users, "users", strict=cfg.strict, rejects=rejects)
        keywords = C.load_keywords(cfg.keywords)
        lemmas = C.load_lemmas(cfg.lemmas) if cfg.lemmas else {}
        unscored = [t for t in tweets if t.hate_score is None]
        if unscored:
            rescored = {t.id: t for t in C.fallback_scorer(unscored, keywords)}
            tweets = [rescored.get(t.id, t) for t in tweets]
        d1 = C.keyword_filter([t for t in tweets if t.kind != "retweet"], keywords)
        hateful = C.hate_threshold_filter(d1, cfg.hate_threshold)
        key = C.key_contributors(hateful, cfg.min_hateful)
        d2 = [t for t in tweets if t.user_id in key]
        self.state.update(tweets=tweets, users=users, keywords=keywords, lemmas=lemmas,
                          d1=d1, hateful=hateful, key=key, d2=d2)
        d = self.dir("ingest")
        (d / "key_contributors.txt").write_text("".join(u + "\n" for u in sorted(key)), encoding="utf-8")
        _dump({
            "tweets": len(tweets), "users": len(users), "rejected_records": len(rejects),
            "fallback_scored": len(unscored), "d1_keyword_tweets": len(d1),
            "hateful_tweets": len(hateful), "key_contributors": len(key), "d2_tweets": len(d2),
            "keywords": keywords,
        }, d / "summary.json")

    def _split(self, tweets):
        t1 = self.cfg.takeover_index
        return [t for t in tweets if t.day < t1], [t for t in tweets if t.day >= t1]

    def lexshift(self):
        cfg, st = self.cfg, self.state
        d = self.dir("lexshift")
        originals = [t for t in st["d2"] if t.kind == "original"]
        labelled = [t for t in originals if t.category is not None]
        pre, post = self._split(labelled)
        L.write_category_shift(L.composition_shift(pre, post), d / "category_shift.csv")
        pre, post = self._split(originals)
        lem = st["lemmas"]
        toks = lambda ts: [C.preprocess(t.text, lemmas=lem, lexical=True).tokens for t in ts]  # noqa: E731
        ci, cj = L.CountTable.from_tokens(toks(pre)), L.CountTable.from_tokens(toks(post))
        prior = self._prior(ci.counts.keys() | cj.counts.keys())
        scored = L.log_odds_dirichlet(ci, cj, prior)
        L.write_scored_words(scored, d / "scored_words.csv")
        kw = dict(k=cfg.representative_k, min_freq_frac=cfg.min_freq_frac, totals=(ci.total, cj.total))
        L.write_scored_words(L.representative_words(scored, side="top", **kw), d / "representative_pre.csv")
        L.write_scored_words(L.representative_words(scored, side="bottom", **kw), d / "representative_post.csv")
        _dump({"unlabelled_originals": len(originals) - len(labelled), "pre_tokens": ci.total,
               "post_tokens": cj.total}, d / "summary.json")

    def _prior(self, vocab) -> L.PriorTable:
        if "background" not in self.state:
            self.state["background"] = L.read_background(self.cfg.background) if self.cfg.background else {}
        return L.build_prior(self.state["background"], vocab)

    def embedshift(self):
        cfg, st = self.cfg, self.state
        d = self.dir("embedshift")
        pre, post = self._split(st["d2"])
        pairs = W.read_pairs(cfg.pairs) if cfg.pairs else []
        models = {}
        for name, part in (("pre", pre), ("post", post)):
            sents = [C.preprocess(t.text).tokens for t in part]
            conf = W.SGNSConfig(**{**cfg.sgns, "seed": substream_seed(cfg.seed, f"embedshift.{name}")})
            try:
                models[name] = W.train_sgns(sents, conf)
            except W.EmbedError as exc:
                log.warning("embedshift: %s model not trained: %s", name, exc)
                models[name] = None
                continue
            W.save_model(models[name], d / f"model_{name}.txt")
        empty = W.EmbeddingModel({}, np.zeros((0, 1)), np.zeros((0, 1)))
        rows = W.similarity_shift(models["pre"] or empty, models["post"] or empty, pairs)
        W.write_similarity(rows, d / "similarity.csv")
        _dump({"caveat": W.CROSS_MODEL_CAVEAT,
               "vocab_pre": len(models["pre"].vocab) if models["pre"] else 0,
               "vocab_post": len(models["post"].vocab) if models["post"] else 0,
               "sgns": W.config_dict(W.SGNSConfig(**cfg.sgns))}, d / "summary.json")

    def graph(self):
        cfg, st = self.cfg, self.state
        d = self.dir("graph")
        key = st["key"]
        sources = [t for t in st["hateful"] if t.kind == "original" and t.user_id in key]
        ids = {t.id for t in sources}
        kinds = G.INTERACTION_KINDS[cfg.graph_mode]
        interactions = [t for t in st["tweets"] if t.kind in kinds]
        linked = [t for t in interactions if t.ref_id in ids]
        edges = G.build_edges(sources + linked, cfg.graph_mode, directed=cfg.directed, end_day=cfg.end_index)
        b = cfg.bucket_days
        if b > 1:
            edges = G.TemporalEdgeList([(s, t, day // b) for s, t, day in edges.edges], directed=cfg.directed,
                                       end_day=cfg.end_index // b, duplicates=edges.duplicates,
                                       self_loops=edges.self_loops)
        edges.unresolved = len(interactions) - len(linked)
        st["edges"] = edges
        G.write_edges_csv(edges, d / "edges.csv")
        series = [G.edge_influx_series(edges), G.avg_degree_centrality_series(edges),
                  G.component_count_series(edges)]
        G.write_metrics_csv(series, d / "metrics.csv")
        t1 = cfg.takeover_index // b
        pre, post, pct = G.edge_influx(edges, t1)
        summary = {
            "bucket_days": b, "edges": len(edges), "nodes": len(edges.index), "duplicates": edges.duplicates,
            "self_loops": edges.self_loops, "unlinked_interactions": edges.unresolved,
            "edge_influx": {"pre_rate": pre, "post_rate": post, "pct_change": pct},
            "slope_note": "OLS slope of the per-bucket series on [0, t1) and [t1, end], in buckets",
        }
        for s in series[1:]:
            try:
                slope_pre, slope_post, pct_slope = G.growth_rate_comparison(s, t1)
            except G.GraphError as exc:
                log.warning("graph: %s slope not computed: %s", s.metric, exc)
                slope_pre = slope_post = pct_slope = None
            summary[s.metric + "_slope"] = {"pre": slope_pre, "post": slope_post, "pct_change": pct_slope}
        _dump(summary, d / "summary.json")
        for label, day in (("first", max(0, t1 - max(1, 14 // b))), ("last", edges.end_day)):
            snap = G.snapshot(edges, day)
            sample = G.forest_fire_sample(snap, min(cfg.forest_fire_nodes, len(snap.nodes)), cfg.p_forward,
                                          substream_seed(cfg.seed, f"forestfire.{label}"))
            G.export_dot(sample, d / f"sample_{label}.dot", name=f"day{day}")
            G.export_json(sample, d / f"sample_{label}.json")

    def mpr(self):
        cfg, st = self.cfg, self.state
        d = self.dir("mpr")
        edges = st["edges"]
        series = I.pagerank_series(edges, cfg.damping, cfg.tolerance, cfg.max_iter)
        I.write_pagerank_series(series, d / "pagerank_series.csv")
        t1 = cfg.takeover_index // cfg.bucket_days
        scores = I.mpr_scores(series, t1, disjoint=cfg.f3_disjoint) if series.users else []
        excl = I.read_exclusions(cfg.exclusions) if cfg.exclusions else set()
        chosen = I.influencer_intersection(scores, cfg.topk, excl)
        st["scores"] = scores
        I.write_mpr(scores, chosen, d / "mpr.csv")
        (d / "influencers.txt").write_text("".join(u + "\n" for u in sorted(chosen.users)), encoding="utf-8")
        bio_rows = []
        users = st["users"]
        if chosen.users and users:
            vocab = set()
            for u in users:
                vocab.update(I.bio_tokens(u.bio, st["lemmas"]))
            try:
                bio_rows = I.bio_profile(chosen, users, self._prior(vocab), st["lemmas"])
            except I.InfluenceError as exc:
                log.warning("mpr: bio profile skipped: %s", exc)
        L.write_scored_words(bio_rows, d / "bio_words.csv")
        _dump({"users_scored": len(scores), "influencers": len(chosen.users), "k": cfg.topk,
               "excluded": len(excl), "pagerank_unconverged_days":
               [day for day, ok in zip(series.days, series.converged or []) if not ok]}, d / "summary.json")

    def earlydetect(self):
        cfg, st = self.cfg, self.state
        d = self.dir("earlydetect")
        target = I.composite_rank(st["scores"])
        profiles = [u for u in st["users"] if u.user_id in target]
        reports, rho_rows = [], []
        if len(profiles) >= 2:
            for col in E.F1_COLUMNS:
                feat = {p.user_id: float(getattr(p, col)) for p in profiles}
                rho = E.spearman({u: target[u] for u in feat}, feat)
                rho_rows.append((col, rho))
        if cfg.embeddings:
            emb = E.read_embeddings(cfg.embeddings)
        else:
            emb = {t.id: E.hash_embed(t.text) for t in st["tweets"]
                   if t.day < cfg.takeover_index and t.user_id in target}
        authorship = {t.id: t.user_id for t in st["tweets"] if t.day < cfg.takeover_index and t.id in emb}
        y = {u: float(r) for u, r in target.items()}
        if len(profiles) >= 5:
            f1 = E.build_f1(profiles)
            f2 = E.build_f2(emb, authorship, users=f1.users)
            sets = [f1]
            if f2.users:
                sets += [f2, E.combine(f1, f2)]
            seed = substream_seed(cfg.seed, "earlydetect")
            for fm in sets:
                if len(fm.users) < 5:
                    continue
                reports.append(E.fit_linear(fm, y, cfg.train_fraction, seed)[1])
                reports.append(E.fit_adaboost(fm, y, cfg.rounds, cfg.max_depth, cfg.train_fraction, seed)[1])
        E.write_reports(reports, d / "report.json")
        with open(d / "spearman.csv", "w", encoding="utf-8") as fh:
            fh.write("feature,rho\n")
            for col, rho in rho_rows:
                fh.write(f"{col},{'NA' if rho is None else repr(rho)}\n")


def resolve_stages(requested, cfg: PipelineConfig) -> list[str]:
    """Requested stages plus their prerequisites, in execution order."""
    want = set()

    def add(s):
        if s in want:
            return
        want.add(s)
        for dep in DEPENDS[s]:
            add(dep)

    for s in requested:
        if s not in DEPENDS:
            raise ConfigError(f"unknown stage {s!r}")
        add(s)
    return [s for s in STAGES if s in want]


@dataclass
class RunResult:
    exit_code: int
    manifest: dict


def run_pipeline(cfg: PipelineConfig, out: str | Path, stages=None) -> RunResult:
    """Run the enabled stages and write every output plus ``manifest.json`` under ``out``."""
    out = Path(out)
    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        log.error("invalid config: %s", exc)
        return RunResult(EXIT_INVALID, {"error": str(exc)})
    if stages is None:
        stages = [s for s in STAGES if cfg.stages.get(s, True)]
    order = resolve_stages(stages, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory: %s", exc)
        return RunResult(EXIT_IO, {"error": str(exc)})

    run = Run(cfg, out)
    status = {s: "pending" for s in order}
    errors = {}
    code = EXIT_OK

    def execute(stage):
        nonlocal code
        if any(status.get(dep) != "ok" for dep in DEPENDS[stage]):
            status[stage] = "skipped"
            return
        try:
            getattr(run, stage)()
            status[stage] = "ok"
        except OSError as exc:
            status[stage] = "FAILED"
            errors[stage] = f"{type(exc).__name__}: {exc}"
            code = max(code, EXIT_IO)
        except Exception as exc:  # stage boundary: record and keep partial outputs
            log.exception("stage %s failed", stage)
            status[stage] = "FAILED"
            errors[stage] = f"{type(exc).__name__}: {exc}"
            code = EXIT_IO if code == EXIT_IO else EXIT_STAGE
            if isinstance(exc, C.RecordError) and stage == "ingest":
                code = EXIT_INVALID

    if "ingest" in order:
        execute("ingest")
    middle = [s for s in ("lexshift", "embedshift", "graph") if s in order]
    if cfg.jobs > 1 and len(middle) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            list(pool.map(execute, middle))
    else:
        for s in middle:
            execute(s)
    for s in ("mpr", "earlydetect"):
        if s in order:
            execute(s)

    inputs = {}
    for name in ("tweets", "users", "keywords", "lemmas", "background", "embeddings", "pairs", "exclusions"):
        p = getattr(cfg, name)
        if p is not None and Path(p).is_file():
            inputs[name] = sha256(Path(p))
    manifest = {
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "config": cfg.echo(),
        "inputs": inputs,
        "versions": {"modshift": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "kernel_backend": kernels.BACKEND},
        "stages": status,
        "errors": errors,
        "exit_code": code,
    }
    _dump(manifest, out / "manifest.json")
    return RunResult(code, manifest)
