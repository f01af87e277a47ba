"""Day-discretized retweet network: edge list, cumulative snapshots, and growth metrics."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .corpus import TweetRecord

log = logging.getLogger(__name__)

INTERACTION_KINDS = {
    "retweet_only": ("retweet",),
    "all_interactions": ("retweet", "reply", "quote"),
}


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    day: int
    nodes: frozenset
    edges: tuple  # ((src, dst), ...), deduplicated
    directed: bool = True

    def neighbors(self) -> dict:
        adj = {n: set() for n in self.nodes}
        for s, d in self.edges:
            adj[s].add(d)
            if not self.directed:
                adj[d].add(s)
        return {n: sorted(v) for n, v in adj.items()}


@dataclass
class TemporalEdgeList:
    """Deduplicated (src, dst, day) interactions in canonical (day, src, dst) order.

    A repeated (src, dst) pair keeps its earliest day; in undirected mode the
    pair is unordered. ``seed_nodes`` are present from day 0 even without edges.
    """

    edges: list[tuple[str, str, int]]
    directed: bool = True
    end_day: int | None = None
    seed_nodes: tuple[str, ...] = ()
    unresolved: int = 0
    self_loops: int = 0
    duplicates: int = 0
    allow_self_loops: bool = False

    def __post_init__(self):
        first = {}
        dups = 0
        for s, d, day in sorted(self.edges, key=lambda e: (e[2], e[0], e[1])):
            if day < 0:
                raise GraphError(f"negative day on edge {(s, d, day)}")
            if s == d and not self.allow_self_loops:
                raise GraphError(f"self-loop on {s!r} with self-loops disabled")
            key = (s, d) if self.directed or s <= d else (d, s)
            if key in first:
                dups += 1
                continue
            first[key] = day
        self.edges = sorted(((s, d, day) for (s, d), day in first.items()), key=lambda e: (e[2], e[0], e[1]))
        self.duplicates += dups
        last = self.edges[-1][2] if self.edges else 0
        if self.end_day is None:
            self.end_day = last
        elif last > self.end_day:
            raise GraphError(f"edge day {last} beyond end_day {self.end_day}")
        self.seed_nodes = tuple(sorted(set(self.seed_nodes)))

    def __len__(self):
        return len(self.edges)

    @property
    def days(self) -> int:
        return self.end_day + 1

    @cached_property
    def index(self) -> dict:
        """Node id -> dense index: seed nodes first, then by first appearance."""
        idx = {}
        for n in self.seed_nodes:
            idx.setdefault(n, len(idx))
        for s, d, _ in self.edges:
            idx.setdefault(s, len(idx))
            idx.setdefault(d, len(idx))
        return idx

    @property
    def nodes(self) -> list:
        return list(self.index)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = self.index
        src = np.array([idx[s] for s, _, _ in self.edges], dtype=np.int64)
        dst = np.array([idx[d] for _, d, _ in self.edges], dtype=np.int64)
        day = np.array([t for _, _, t in self.edges], dtype=np.int64)
        return src, dst, day

    @cached_property
    def node_first_day(self) -> np.ndarray:
        first = np.full(len(self.index), self.end_day + 1, dtype=np.int64)
        first[: len(self.seed_nodes)] = 0
        src, dst, day = self.arrays
        np.minimum.at(first, src, day)
        np.minimum.at(first, dst, day)
        return first

    def nodes_per_day(self) -> np.ndarray:
        return np.bincount(self.node_first_day, minlength=self.days + 1)[: self.days].cumsum()

    def edges_per_day(self) -> np.ndarray:
        """New edges per day (length ``days``)."""
        return np.bincount(self.arrays[2], minlength=self.days)

    def edge_count_through(self, day: int) -> int:
        return int(np.searchsorted(self.arrays[2], day, side="right"))


def build_edges(
    tweets: Sequence[TweetRecord],
    mode: str = "retweet_only",
    *,
    directed: bool = True,
    allow_self_loops: bool = False,
    end_day: int | None = None,
    seed_nodes: Iterable[str] = (),
) -> TemporalEdgeList:
    """One edge per interaction: interacting user -> author of the referenced tweet.

    The edge is dated by the referenced (original) tweet's day. References
    that do not resolve inside ``tweets`` are counted, not fatal.
    """
    if mode not in INTERACTION_KINDS:
        raise GraphError(f"unknown mode {mode!r}")
    kinds = INTERACTION_KINDS[mode]
    by_id = {t.id: t for t in tweets}
    raw = []
    unresolved = self_loops = 0
    for t in tweets:
        if t.kind not in kinds:
            continue
        ref = by_id.get(t.ref_id) if t.ref_id else None
        if ref is None:
            unresolved += 1
            continue
        if ref.user_id == t.user_id and not allow_self_loops:
            self_loops += 1
            continue
        raw.append((t.user_id, ref.user_id, ref.day))
    if unresolved:
        log.info("build_edges: %d unresolvable reference(s)", unresolved)
    return TemporalEdgeList(
        raw,
        directed=directed,
        end_day=end_day,
        seed_nodes=tuple(seed_nodes),
        unresolved=unresolved,
        self_loops=self_loops,
        allow_self_loops=allow_self_loops,
    )


def snapshot(edges: TemporalEdgeList, day: int) -> Snapshot:
    """Cumulative graph of every edge dated on or before ``day``."""
    if not 0 <= day <= edges.end_day:
        raise GraphError(f"day {day} outside window [0, {edges.end_day}]")
    n = edges.edge_count_through(day)
    included = tuple((s, d) for s, d, _ in edges.edges[:n])
    nodes = set(edges.seed_nodes)
    for s, d in included:
        nodes.add(s)
        nodes.add(d)
    return Snapshot(day, frozenset(nodes), included, edges.directed)


def pct_change(before: float, after: float) -> float | None:
    """100 * (after - before) / |before|; None when ``before`` is zero."""
    if before == 0:
        return None
    return 100.0 * (after - before) / abs(before)


def edge_influx(edges: TemporalEdgeList, t1: int) -> tuple[float, float, float | None]:
    """Mean new edges per day before ``t1`` and from ``t1`` through the last day."""
    end = edges.end_day
    if not 0 < t1 < end:
        raise GraphError(f"need 0 < t1 < {end}")
    per_day = edges.edges_per_day()
    pre = per_day[:t1].sum() / t1
    post = per_day[t1:].sum() / (end - t1 + 1)
    return float(pre), float(post), pct_change(pre, post)


@dataclass
class MetricSeries:
    metric: str
    values: list[tuple[int, float]] = field(default_factory=list)

    @property
    def days(self) -> np.ndarray:
        return np.array([d for d, _ in self.values], dtype=float)

    @property
    def array(self) -> np.ndarray:
        return np.array([v for _, v in self.values], dtype=float)


def edge_influx_series(edges: TemporalEdgeList) -> MetricSeries:
    return MetricSeries("edge_influx", [(d, float(c)) for d, c in enumerate(edges.edges_per_day())])


def avg_degree_centrality_series(edges: TemporalEdgeList) -> MetricSeries:
    """Mean of undirected degree / (N_d - 1) over nodes of each daily snapshot."""
    first = {}
    for s, d, day in edges.edges:
        if s == d:
            continue
        key = (s, d) if s <= d else (d, s)
        first.setdefault(key, day)
    und = np.bincount(np.fromiter(first.values(), dtype=np.int64, count=len(first)), minlength=edges.days)
    und = und[: edges.days].cumsum()
    n = edges.nodes_per_day()
    out = []
    for day in range(edges.days):
        nd = int(n[day])
        val = 2.0 * und[day] / (nd * (nd - 1)) if nd > 1 else 0.0
        out.append((day, float(val)))
    return MetricSeries("avg_degree_centrality", out)


def component_count_series(edges: TemporalEdgeList, backend: str | None = None) -> MetricSeries:
    """Weakly connected components of each snapshot, via one union-find pass."""
    src, dst, day = edges.arrays
    merged = kernels.uf_merge_flags(len(edges.index), src, dst, backend=backend)
    merges = np.bincount(day[merged.astype(bool)], minlength=edges.days)[: edges.days].cumsum()
    n = edges.nodes_per_day()
    return MetricSeries("component_count", [(d, float(n[d] - merges[d])) for d in range(edges.days)])


def ols_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def growth_rate_comparison(series: MetricSeries, t1: int) -> tuple[float, float, float | None]:
    """OLS slope of the series on days [0, t1) and [t1, end], and their % change."""
    days, vals = series.days, series.array
    pre = days < t1
    post = ~pre
    if pre.sum() < 2 or post.sum() < 2:
        raise GraphError("each segment needs at least two points")
    a, b = ols_slope(days[pre], vals[pre]), ols_slope(days[post], vals[post])
    return a, b, pct_change(a, b)


def forest_fire_sample(g: Snapshot, target_nodes: int, p_forward: float = 0.7, seed: int = 0) -> Snapshot:
    """Forest-fire node sample of ``g``; returns the induced subgraph.

    Each burning node ignites Geometric(1 - p_forward) - 1 of its unburned
    neighbours (out-neighbours when directed; no backward burning). A dead fire
    restarts at a random unburned node.
    """
    if not 0.0 < p_forward < 1.0:
        raise GraphError("p_forward must lie in (0, 1)")
    if target_nodes > len(g.nodes):
        raise GraphError(f"target_nodes {target_nodes} exceeds graph size {len(g.nodes)}")
    if target_nodes < 0:
        raise GraphError("target_nodes must be nonnegative")
    rng = np.random.default_rng(seed)
    adj = g.neighbors()
    order = sorted(g.nodes)
    burned = set()
    while len(burned) < target_nodes:
        fresh = [n for n in order if n not in burned]
        start = fresh[rng.integers(len(fresh))]
        burned.add(start)
        queue = [start]
        while queue and len(burned) < target_nodes:
            x = queue.pop(0)
            cand = [y for y in adj[x] if y not in burned]
            k = min(int(rng.geometric(1.0 - p_forward)) - 1, len(cand))
            if k <= 0:
                continue
            for j in rng.choice(len(cand), size=k, replace=False):
                if len(burned) >= target_nodes:
                    break
                burned.add(cand[j])
                queue.append(cand[j])
    edges = tuple((s, d) for s, d in g.edges if s in burned and d in burned)
    return Snapshot(g.day, frozenset(burned), edges, g.directed)


# -- files ---------------------------------------------------------------------------


def write_edges_csv(edges: TemporalEdgeList, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "day"])
        w.writerows(edges.edges)


def read_edges_csv(path: str | Path, directed: bool = True, end_day: int | None = None) -> TemporalEdgeList:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(r["src"], r["dst"], int(r["day"])) for r in csv.DictReader(fh)]
    return TemporalEdgeList(rows, directed=directed, end_day=end_day)


def write_metrics_csv(series: Iterable[MetricSeries], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "metric", "value"])
        for s in series:
            for day, v in s.values:
                w.writerow([day, s.metric, repr(v)])


def export_dot(g: Snapshot, path: str | Path, name: str = "sample") -> None:
    arrow = "->" if g.directed else "--"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{'digraph' if g.directed else 'graph'} {json.dumps(name)} {{\n")
        for n in sorted(g.nodes):
            fh.write(f"  {json.dumps(n)};\n")
        for s, d in sorted(g.edges):
            fh.write(f"  {json.dumps(s)} {arrow} {json.dumps(d)};\n")
        fh.write("}\n")


def export_json(g: Snapshot, path: str | Path) -> None:
    doc = {
        "day": g.day,
        "directed": g.directed,
        "nodes": sorted(g.nodes),
        "edges": [list(e) for e in sorted(g.edges)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
