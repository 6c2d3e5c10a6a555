"""Query automorphisms, orbits and symmetry-breaking conditions.

Automorphisms are enumerated exhaustively by backtracking over node images
(pruned by node colour and by the edge multiset between already mapped
node pairs), then expanded over every bijection between interchangeable
parallel edges.  Conditions are read off a stabilizer chain.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterable

from .query import QueryGraph

DEFAULT_MAX_QUERY_NODES = 12


class SymmetryConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Automorphism:
    node_perm: tuple
    edge_perm: tuple


@dataclass
class BreakingConditions:
    node_conds: list = field(default_factory=list)  # (a, b): image of a < image of b
    edge_conds: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.node_conds or self.edge_conds)


def _props_key(props: dict) -> tuple:
    return tuple(sorted((k, type(v).__name__, v) for k, v in props.items()))


def _edge_key(q: QueryGraph, e: int, fixed_edges: frozenset) -> tuple:
    qe = q.edges[e]
    return (qe.etype or "", _props_key(qe.properties), qe.directed, e if e in fixed_edges else -1)


def _oriented(q: QueryGraph, e: int, a: int, key: tuple) -> tuple:
    """Signature of edge ``e`` seen from endpoint ``a`` of its pair."""
    qe = q.edges[e]
    if qe.src == qe.dst:
        kind = "loop"
    elif not qe.directed:
        kind = "und"
    else:
        kind = "fwd" if qe.src == a else "rev"
    return (kind,) + key


def enumerate_automorphisms(
    q: QueryGraph,
    fixed_nodes: Iterable[int] = (),
    fixed_edges: Iterable[int] = (),
    max_query_nodes: int = DEFAULT_MAX_QUERY_NODES,
) -> list[Automorphism]:
    """The full automorphism group of ``q`` (identity included).

    Elements listed in ``fixed_nodes``/``fixed_edges`` must map to
    themselves; the engine passes the entities mentioned in WHERE so that
    every returned permutation also preserves the conditions.
    """
    n = q.n_nodes
    if n > max_query_nodes:
        raise SymmetryConfigError(
            f"query has {n} nodes, above the automorphism cap of {max_query_nodes}"
        )
    fixed_nodes = frozenset(fixed_nodes)
    fixed_edges = frozenset(fixed_edges)
    ekey = [_edge_key(q, e, fixed_edges) for e in range(q.n_edges)]

    pair_sig: dict[tuple[int, int], tuple] = {}
    incident: list[Counter] = [Counter() for _ in range(n)]
    for (a, b), eids in q.pairs.items():
        fwd = tuple(sorted(_oriented(q, e, a, ekey[e]) for e in eids))
        rev = tuple(sorted(_oriented(q, e, b, ekey[e]) for e in eids))
        pair_sig[(a, b)] = fwd
        pair_sig[(b, a)] = rev
        incident[a].update(fwd)
        if a != b:
            incident[b].update(rev)

    colour = [
        (
            tuple(sorted(nd.labels)),
            _props_key(nd.properties),
            nd.id if nd.id in fixed_nodes else -1,
            tuple(sorted(incident[nd.id].items())),
        )
        for nd in q.nodes
    ]

    node_perms: list[tuple] = []
    perm = [-1] * n
    used = [False] * n

    def extend(u: int) -> None:
        if u == n:
            node_perms.append(tuple(perm))
            return
        for c in range(n):
            if used[c] or colour[c] != colour[u]:
                continue
            perm[u] = c
            ok = True
            for w in range(u + 1):
                if pair_sig.get((u, w), ()) != pair_sig.get((c, perm[w]), ()):
                    ok = False
                    break
            if ok:
                used[c] = True
                extend(u + 1)
                used[c] = False
            perm[u] = -1

    extend(0)

    auts = []
    for np_ in node_perms:
        choices = []  # per bucket: (source edges, list of image orderings)
        for (a, b), eids in q.pairs.items():
            pa, pb = np_[a], np_[b]
            images = q.pairs[(min(pa, pb), max(pa, pb))]
            src_buckets = defaultdict(list)
            for e in eids:
                src_buckets[_oriented(q, e, a, ekey[e])].append(e)
            img_buckets = defaultdict(list)
            for e in images:
                img_buckets[_oriented(q, e, pa, ekey[e])].append(e)
            for sig, src in src_buckets.items():
                choices.append((src, list(permutations(img_buckets[sig]))))
        for combo in product(*(c[1] for c in choices)):
            ep = [-1] * q.n_edges
            for (src, _), img in zip(choices, combo):
                for e, f in zip(src, img):
                    ep[e] = f
            auts.append(Automorphism(np_, tuple(ep)))
    return auts


def _orbits(perms: list[tuple], size: int) -> list[set[int]]:
    parent = list(range(size))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in perms:
        for x, y in enumerate(p):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
    groups: dict[int, set[int]] = defaultdict(set)
    for x in range(size):
        groups[find(x)].add(x)
    return [groups[find(x)] for x in range(size)]


def node_orbits(auts: list[Automorphism], n: int) -> list[set[int]]:
    return _orbits([a.node_perm for a in auts], n)


def edge_orbits(auts: list[Automorphism], m: int) -> list[set[int]]:
    return _orbits([a.edge_perm for a in auts], m)


def _chain(group: list[Automorphism], size: int, which: str) -> tuple[list, list[Automorphism]]:
    conds = []
    while True:
        perms = [getattr(a, which) for a in group]
        orbit_of = _orbits(perms, size)
        pick = next((x for x in range(size) if len(orbit_of[x]) > 1), None)
        if pick is None:
            return conds, group
        conds.extend((pick, y) for y in sorted(orbit_of[pick]) if y != pick)
        group = [a for a in group if getattr(a, which)[pick] == pick]


def derive_conditions(auts: list[Automorphism]) -> BreakingConditions:
    """Stabilizer-chain conditions: node conditions first, then edge
    conditions under the subgroup fixing every node."""
    if not auts:
        return BreakingConditions()
    n = len(auts[0].node_perm)
    m = len(auts[0].edge_perm)
    node_conds, rest = _chain(auts, n, "node_perm")
    edge_conds, _ = _chain(rest, m, "edge_perm")
    return BreakingConditions(node_conds, edge_conds)


def compose(a: Automorphism, b: Automorphism) -> Automorphism:
    """``a`` after ``b``."""
    return Automorphism(
        tuple(a.node_perm[x] for x in b.node_perm), tuple(a.edge_perm[x] for x in b.edge_perm)
    )


def inverse(a: Automorphism) -> Automorphism:
    np_ = [0] * len(a.node_perm)
    for i, x in enumerate(a.node_perm):
        np_[x] = i
    ep = [0] * len(a.edge_perm)
    for i, x in enumerate(a.edge_perm):
        ep[x] = i
    return Automorphism(tuple(np_), tuple(ep))
