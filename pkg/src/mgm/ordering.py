"""Processing order of query edges.

The full heuristic greedily picks the connected query pair with the highest
(constraint factor, score) priority and appends all of its edges.  The
ablation kinds rank pairs by a single static key instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import Domains
from .query import QueryGraph

ORDERING_KINDS = ("full", "random", "domain", "edgelabel", "degree")


class OrderingConfigError(ValueError):
    pass


@dataclass
class EdgeOrdering:
    edges: list
    pairs: list = field(default_factory=list)  # pairs in the order they were chosen

    def __iter__(self):
        return iter(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


def jaccard(q: QueryGraph, qi: int, qj: int) -> float:
    a, b = q.neighbors(qi), q.neighbors(qj)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def constraint_factor(pair: tuple, covered: set) -> int:
    i, j = pair
    if i == j:
        return 2 if i in covered else 0
    return (i in covered) + (j in covered)


def pair_score(pair: tuple, cf: int, dom_size: int, q: QueryGraph, covered: set = frozenset()) -> float:
    i, j = pair
    if dom_size <= 0:
        return 0.0
    if cf == 2:
        return 1.0 / dom_size
    jac = jaccard(q, i, j)
    if cf == 1:
        free = j if i in covered else i
        return q.total_degree(free) * jac / dom_size
    return q.total_degree(i) * q.total_degree(j) * jac / dom_size


def _emit(q: QueryGraph, ranked_pairs) -> EdgeOrdering:
    edges = []
    for pair in ranked_pairs:
        edges.extend(sorted(q.pairs[pair]))
    return EdgeOrdering(edges, list(ranked_pairs))


def build_ordering(q: QueryGraph, domains: Domains) -> EdgeOrdering:
    remaining = sorted(q.pairs)
    covered: set[int] = set()
    chosen = []
    while remaining:
        best = None
        for pair in remaining:
            cf = constraint_factor(pair, covered)
            sc = pair_score(pair, cf, domains.size(pair), q, covered)
            key = (-cf, -sc, pair)
            if best is None or key < best[0]:
                best = (key, pair)
        pair = best[1]
        chosen.append(pair)
        remaining.remove(pair)
        covered.update(pair)
    return _emit(q, chosen)


def ablation_ordering(kind: str, q: QueryGraph, domains: Domains, seed: int = 0,
                      type_frequency: dict | None = None) -> EdgeOrdering:
    """Ordering for one of the ablation kinds; ``full`` is the main heuristic.

    ``type_frequency`` maps edge types to their target counts (needed by
    ``edgelabel``; untyped edges rank as the total edge count).
    """
    if kind not in ORDERING_KINDS:
        raise OrderingConfigError(f"unknown ordering kind {kind!r}; choose from {', '.join(ORDERING_KINDS)}")
    if kind == "full":
        return build_ordering(q, domains)
    pairs = sorted(q.pairs)
    if kind == "random":
        rng = np.random.default_rng(seed)
        return _emit(q, [pairs[k] for k in rng.permutation(len(pairs))])
    if kind == "domain":
        return _emit(q, sorted(pairs, key=lambda p: (domains.size(p), p)))
    if kind == "edgelabel":
        freq = type_frequency or {}
        total = sum(freq.values())

        def rarest(pair):
            return min(freq.get(q.edges[e].etype, 0) if q.edges[e].etype is not None else total
                       for e in q.pairs[pair])

        return _emit(q, sorted(pairs, key=lambda p: (rarest(p), p)))
    # degree: the cf = 0 numerator, highest first
    def numerator(pair):
        i, j = pair
        return q.total_degree(i) * q.total_degree(j) * jaccard(q, i, j)

    return _emit(q, sorted(pairs, key=lambda p: (-numerator(p), p)))
