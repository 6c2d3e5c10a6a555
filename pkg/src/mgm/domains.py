"""Compatibility domains of connected query pairs.

A domain holds oriented target pairs ``(t_a, t_b)`` with ``t_a`` playing
the pair's smaller query node.  Entries are kept in two sorted copies, by
``(t_a, t_b)`` and by ``(t_b, t_a)``, so that the matcher can look up the
entries extending either bound endpoint with a binary search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cypher.evaluate import literal_truth, node_resolver, edge_resolver
from .graph import properties_contain
from .index import TargetIndex, swap_signature
from .query import QueryGraph


@dataclass
class QueryRows:
    pair: tuple
    forward: np.ndarray  # row of (q_i, q_j)
    reverse: np.ndarray  # row of (q_j, q_i)


def build_query_bit_matrix(q: QueryGraph, idx: TargetIndex) -> dict | None:
    """Two rows per connected query pair, in target alphabet positions.

    Returns None when a query label or type does not occur in the target:
    such a query has no occurrence.  Untyped or undirected edges leave the
    type fields empty, since no single direction bit is implied.
    """
    g = idx.graph
    h, p = idx.h, idx.p
    for lab in q.labels():
        if lab not in g.label_index:
            return None
    for t in q.types():
        if t not in g.type_index:
            return None
    out = {}
    for (i, j), eids in q.pairs.items():
        words = np.zeros(idx.n_words, dtype=np.uint64)
        for lab in q.nodes[i].labels:
            kernels.set_bit(words, g.label_index[lab])
        for lab in q.nodes[j].labels:
            kernels.set_bit(words, h + 2 * p + g.label_index[lab])
        for e in eids:
            qe = q.edges[e]
            if qe.etype is None or not qe.directed:
                continue
            k = g.type_index[qe.etype]
            if qe.src == i:  # i -> j, or a loop
                kernels.set_bit(words, h + p + k)
            if qe.dst == i:
                kernels.set_bit(words, h + k)
        out[(i, j)] = QueryRows((i, j), words, swap_signature(words, h, p))
    return out


def query_degree_table(q: QueryGraph, u: int, idx: TargetIndex) -> np.ndarray:
    """(p, 2) array of type-dependent out/in degrees of query node ``u``."""
    deg = np.zeros((max(idx.p, 1), 2), dtype=np.int32)
    for qe in q.edges:
        if qe.etype is None or not qe.directed:
            continue
        k = idx.graph.type_index[qe.etype]
        if qe.src == u:
            deg[k, 0] += 1
        if qe.dst == u:
            deg[k, 1] += 1
    return deg


def degree_check(q: QueryGraph, q_pair: tuple, t_pair: tuple, idx: TargetIndex) -> bool:
    """Conditions on type-dependent in/out degrees for both pair members."""
    for qn, tn in zip(q_pair, t_pair):
        need = query_degree_table(q, qn, idx)
        if np.any(need > idx.type_degree[tn]):
            return False
    return True


def node_filter_mask(q: QueryGraph, u: int, idx: TargetIndex, literals=(), with_properties=True):
    """Target nodes able to host query node ``u``: label superset, and when
    ``with_properties`` also inline properties and per-node WHERE literals."""
    mask = idx.label_mask(q.nodes[u].labels)
    qn = q.nodes[u]
    if with_properties and (qn.properties or literals):
        g = idx.graph
        for t in np.nonzero(mask)[0]:
            nd = g.nodes[t]
            ok = properties_contain(nd.properties, qn.properties)
            if ok and literals:
                resolve = node_resolver(nd.labels, nd.properties)
                ok = all(literal_truth(lit, resolve) for lit in literals)
            mask[t] = ok
    return mask


def edge_filter_mask(q: QueryGraph, e: int, idx: TargetIndex, literals=()) -> np.ndarray:
    """Target edges able to host query edge ``e`` (type, properties, WHERE)."""
    g = idx.graph
    qe = q.edges[e]
    if qe.etype is None:
        mask = np.ones(g.n_edges, dtype=bool)
    else:
        k = g.type_index.get(qe.etype)
        if k is None:
            return np.zeros(g.n_edges, dtype=bool)
        mask = g.etype_idx == k
    if qe.properties or literals:
        for te in np.nonzero(mask)[0]:
            ed = g.edges[te]
            ok = properties_contain(ed.properties, qe.properties)
            if ok and literals:
                resolve = edge_resolver(ed.etype, ed.properties)
                ok = all(literal_truth(lit, resolve) for lit in literals)
            mask[te] = ok
    return mask


@dataclass
class Domains:
    pairs: list  # query pairs (i, j), i <= j, sorted
    pair_index: dict
    offsets: np.ndarray  # entries of pair k live in [offsets[k], offsets[k+1])
    a: np.ndarray  # sorted by (a, b) within each pair
    b: np.ndarray
    a2: np.ndarray  # same entries sorted by (b, a)
    b2: np.ndarray

    def size(self, pair: tuple) -> int:
        k = self.pair_index[pair]
        return int(self.offsets[k + 1] - self.offsets[k])

    def entries(self, pair: tuple) -> list:
        k = self.pair_index[pair]
        lo, hi = self.offsets[k], self.offsets[k + 1]
        return list(zip(self.a[lo:hi].tolist(), self.b[lo:hi].tolist()))

    def __contains__(self, item) -> bool:
        pair, entry = item
        k = self.pair_index[pair]
        lo, hi = int(self.offsets[k]), int(self.offsets[k + 1])
        j = lo + int(np.searchsorted(self.a[lo:hi], entry[0], side="left"))
        while j < hi and self.a[j] == entry[0]:
            if self.b[j] == entry[1]:
                return True
            j += 1
        return False

    @property
    def empty(self) -> bool:
        return any(self.offsets[k + 1] == self.offsets[k] for k in range(len(self.pairs)))


def compute_domains(
    q: QueryGraph,
    idx: TargetIndex,
    node_literals=None,
    *,
    use_bitmatrix: bool = True,
    paper_strict: bool = False,
    rows: dict | None = None,
    node_masks: list | None = None,
) -> Domains | None:
    """Domains of every connected query pair, or None if the query cannot
    occur (unknown label/type).

    Without ``paper_strict`` the per-node filters (inline properties and
    per-node WHERE literals) prune domain entries too.  With
    ``use_bitmatrix=False`` the signature test is skipped and labels are
    enforced by the node masks instead.
    """
    if rows is None:
        rows = build_query_bit_matrix(q, idx)
    if rows is None:
        return None
    if node_literals is None:
        node_literals = [[] for _ in q.nodes]
    if node_masks is None:
        node_masks = [
            node_filter_mask(q, u, idx, node_literals[u], with_properties=not paper_strict)
            for u in range(q.n_nodes)
        ]
    qdeg = [query_degree_table(q, u, idx) for u in range(q.n_nodes)]
    qtypes = np.asarray(
        sorted({idx.graph.type_index[t] for t in q.types()}), dtype=np.int64
    )
    pairs = sorted(q.pairs)
    parts_a, parts_b = [], []
    for pair in pairs:
        i, j = pair
        r = rows[pair]
        a, b = kernels.filter_pairs(
            idx.row_first, idx.row_second, idx.bits, r.forward, r.reverse,
            use_bitmatrix, i == j, idx.type_degree, qdeg[i], qdeg[j], qtypes,
            node_masks[i], node_masks[j],
        )
        parts_a.append(np.asarray(a, dtype=np.int64))
        parts_b.append(np.asarray(b, dtype=np.int64))
    return _assemble(pairs, parts_a, parts_b)


def _assemble(pairs, parts_a, parts_b) -> Domains:
    offsets = np.zeros(len(pairs) + 1, dtype=np.int64)
    A, B, A2, B2 = [], [], [], []
    for k, (a, b) in enumerate(zip(parts_a, parts_b)):
        o = np.lexsort((b, a))
        A.append(a[o])
        B.append(b[o])
        o2 = np.lexsort((a, b))
        A2.append(a[o2])
        B2.append(b[o2])
        offsets[k + 1] = offsets[k] + len(a)
    cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0, np.int64)
    return Domains(pairs, {p: k for k, p in enumerate(pairs)}, offsets,
                   cat(A), cat(B), cat(A2), cat(B2))
