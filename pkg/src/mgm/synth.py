"""Synthetic targets (preferential attachment) and random-walk query extraction."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .graph import Edge, Multigraph, Node
from .query import QueryEdge, QueryGraph, QueryNode


class SynthConfigError(ValueError):
    pass


class ExtractionError(RuntimeError):
    pass


@dataclass
class GenConfig:
    n_nodes: int
    n_edges: int
    n_node_labels: int = 1
    n_edge_types: int = 1
    node_dist: str = "uniform"  # or "powerlaw"
    edge_dist: str = "uniform"
    exponent: float = -1.2
    seed: int = 0

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise SynthConfigError("n_nodes must be at least 1")
        if self.n_nodes == 1 and self.n_edges:
            raise SynthConfigError("a single node cannot carry attachment edges")
        if self.n_edges < self.n_nodes - 1:
            raise SynthConfigError("n_edges must be at least n_nodes - 1")
        if self.n_node_labels < 1 or self.n_edge_types < 1:
            raise SynthConfigError("need at least one label and one type")
        for dist in (self.node_dist, self.edge_dist):
            if dist not in ("uniform", "powerlaw"):
                raise SynthConfigError(f"unknown distribution {dist!r}")
        if self.exponent >= 0:
            raise SynthConfigError("power-law exponent must be negative")


@dataclass
class QueryExtractConfig:
    k_nodes: int = 4
    density: float = 0.5
    seed: int = 0
    max_restarts: int = 100

    def validate(self) -> None:
        if self.k_nodes < 2:
            raise SynthConfigError("k_nodes must be at least 2")
        if not 0 < self.density <= 1:
            raise SynthConfigError("density must lie in (0, 1]")


def category_weights(k: int, dist: str, exponent: float = -1.2) -> np.ndarray:
    if dist == "uniform":
        w = np.ones(k)
    else:
        w = np.arange(1, k + 1, dtype=float) ** exponent
    return w / w.sum()


def generate_ba(cfg: GenConfig) -> Multigraph:
    """Preferential-attachment multigraph with exactly ``n_nodes`` and ``n_edges``.

    Node ``i`` attaches ``m_i`` edges, spread so that the totals come out
    exact; endpoints are drawn proportionally to current degree and
    repeated draws become parallel edges.  Each edge direction is a fair
    coin flip.  Labels are ``L0..``, types ``T0..`` (rank order for the
    power law).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n_nodes, cfg.n_edges
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    # endpoint multiset: node x appears deg(x) times
    ends = np.empty(2 * m, dtype=np.int64)
    n_ends = 0
    k = 0
    for i in range(1, n):
        mi = (i * m) // (n - 1) - ((i - 1) * m) // (n - 1)
        if n_ends == 0:
            picks = np.zeros(mi, dtype=np.int64)
        else:
            picks = ends[rng.integers(0, n_ends, size=mi)]
        flip = rng.random(mi) < 0.5
        src[k:k + mi] = np.where(flip, picks, i)
        dst[k:k + mi] = np.where(flip, i, picks)
        ends[n_ends:n_ends + mi] = picks
        ends[n_ends + mi:n_ends + 2 * mi] = i
        n_ends += 2 * mi
        k += mi
    labels = rng.choice(cfg.n_node_labels, size=n, p=category_weights(cfg.n_node_labels, cfg.node_dist, cfg.exponent))
    types = rng.choice(cfg.n_edge_types, size=m, p=category_weights(cfg.n_edge_types, cfg.edge_dist, cfg.exponent))
    nodes = [Node(u, frozenset([f"L{labels[u]}"]), {}) for u in range(n)]
    edges = [Edge(e, int(src[e]), int(dst[e]), f"T{types[e]}", {}) for e in range(m)]
    return Multigraph(nodes, edges)


def _undirected_adjacency(t: Multigraph) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(t.n_nodes)]
    for e in t.edges:
        adj[e.src].append((e.dst, e.id))
        if e.src != e.dst:
            adj[e.dst].append((e.src, e.id))
    return adj


def extract_query(t: Multigraph, cfg: QueryExtractConfig) -> QueryGraph:
    """Random-walk query with exactly ``k_nodes`` nodes and at least the
    requested pair density, copying labels, types and directions."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    adj = _undirected_adjacency(t)
    k = cfg.k_nodes
    n_pairs = k * (k - 1) // 2
    want_pairs = ceil(cfg.density * n_pairs - 1e-9)
    for _ in range(cfg.max_restarts + 1):
        got = _attempt(t, adj, k, want_pairs, rng)
        if got is not None:
            return got
    raise ExtractionError(
        f"no {k}-node query of density {cfg.density} found after {cfg.max_restarts} restarts"
    )


def _attempt(t, adj, k, want_pairs, rng):
    start = int(rng.integers(t.n_nodes))
    order = [start]
    seen = {start}
    walked: list[int] = []
    u = start
    for _ in range(50 * k):
        if len(order) == k or not adj[u]:
            break
        v, e = adj[u][int(rng.integers(len(adj[u])))]
        if e not in walked:
            walked.append(e)
        if v not in seen:
            seen.add(v)
            order.append(v)
        u = v
    if len(order) < k:
        return None
    chosen = set(order)
    edges = [e for e in walked if t.edges[e].src in chosen and t.edges[e].dst in chosen]
    pairs = {frozenset((t.edges[e].src, t.edges[e].dst)) for e in edges}
    n_connected = len({p for p in pairs if len(p) == 2})
    while n_connected < want_pairs:
        options: dict[frozenset, list[int]] = {}
        for a in order:
            for b, e in adj[a]:
                key = frozenset((a, b))
                if b in chosen and b != a and key not in pairs:
                    options.setdefault(key, []).append(e)
        if not options:
            return None
        keys = sorted(options, key=lambda s: sorted(s))
        key = keys[int(rng.integers(len(keys)))]
        cand = sorted(set(options[key]))
        edges.append(cand[int(rng.integers(len(cand)))])
        pairs.add(key)
        n_connected += 1
    qid = {x: i for i, x in enumerate(order)}
    nodes = [QueryNode(i, t.nodes[x].labels, {}) for i, x in enumerate(order)]
    qedges = [
        QueryEdge(i, qid[t.edges[e].src], qid[t.edges[e].dst], t.edges[e].etype, {})
        for i, e in enumerate(edges)
    ]
    return QueryGraph(nodes, qedges)
