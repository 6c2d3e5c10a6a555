"""Shared fixtures: worked-example graphs and the seeded random instance suite."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from mgm.cypher.ast import And, Atom, Accessor, Const, Not, Or
from mgm.cypher.compile import compile_query
from mgm.cypher.parser import parse
from mgm.engine import EngineOptions, occurrences
from mgm.graph import Edge, Multigraph, Node
from mgm.index import TargetIndex, build_target_index
from mgm.query import QueryGraph
from mgm.synth import ExtractionError, GenConfig, QueryExtractConfig, extract_query, generate_ba


def graph(nodes, edges) -> Multigraph:
    """nodes: list of (labels, props); edges: list of (src, dst, type, props)."""
    return Multigraph(
        [Node(i, frozenset(lab), dict(p)) for i, (lab, p) in enumerate(nodes)],
        [Edge(i, s, d, t, dict(p)) for i, (s, d, t, p) in enumerate(edges)],
    )


# -- toy target with t1..t5 (ids 0..4) and edges a..h (ids 0..7) ---------------

GY = {"green", "yellow"}
TOY_EDGE_IDS = {name: i for i, name in enumerate("abcdefgh")}


def toy_target() -> Multigraph:
    nodes = [
        (GY, {"name": "t1"}),
        ({"yellow"}, {"name": "t2"}),
        (GY, {"name": "t3"}),
        (GY, {"name": "t4"}),
        ({"red", "yellow"}, {"name": "t5"}),
    ]
    t1, t2, t3, t4, t5 = range(5)
    edges = [
        (t1, t2, "blue", {"year": 2001}),  # a
        (t4, t3, "red", {"year": 2002}),  # b
        (t1, t3, "blue", {"year": 2003}),  # c
        (t4, t1, "blue", {"year": 2004}),  # d
        (t4, t1, "blue", {"year": 2005}),  # e
        (t1, t4, "red", {"year": 2006}),  # f
        (t3, t1, "red", {"year": 2007}),  # g
        (t3, t5, "blue", {"year": 2008}),  # h
    ]
    return graph(nodes, edges)


TOY_QUERY = (
    "MATCH (q1:green)-[w:red]->(q2:green), (q2)-[x:blue]->(q1), "
    "(q2)-[y:red]->(q3:green), (q3)-[z:blue]->(q4:red) RETURN count()"
)
# q2 and q3 hang off q1 by edges of one type and direction
NODE_SYMMETRIC_QUERY = "MATCH (q1:green)-[r1:blue]->(q2:yellow), (q1)-[r2:blue]->(q3:yellow) RETURN count()"
# x and y are parallel edges of one type and direction
EDGE_SYMMETRIC_QUERY = "MATCH (q1:green)-[x:blue]->(q2:green), (q1)-[y:blue]->(q2) RETURN count()"


def clique_target() -> Multigraph:
    """Four nodes, every pair joined by three edges.  Among t2, t3, t4 the
    pairs carry one edge of each type a, b, c; t1 is tied to the rest by
    edges of type c only."""
    nodes = [({"n"}, {}) for _ in range(4)]
    edges = []
    for s, d in ((1, 2), (2, 3), (1, 3)):
        for t in "abc":
            edges.append((s, d, t, {}))
    for x in (1, 2, 3):
        for _ in range(3):
            edges.append((x, 0, "c", {}))
    return graph(nodes, edges)


TRIANGLE_QUERY = (
    "MATCH (q1)-[:a]->(q2), (q1)-[:b]->(q2), (q2)-[:b]->(q3), (q2)-[:c]->(q3), "
    "(q1)-[:a]->(q3), (q1)-[:c]->(q3) RETURN count()"
)


# -- seeded random instances ---------------------------------------------------

@dataclass
class Instance:
    seed: int
    target: Multigraph
    index: TargetIndex
    query: QueryGraph
    text: str


def make_instance(seed: int, k_range=(3, 5), max_nodes=25, max_edges=100) -> Instance:
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(max(k_range[1], 6), max_nodes + 1))
        e = int(rng.integers(n - 1, min(max_edges, 4 * n) + 1))
        cfg = GenConfig(n, e, int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                        seed=int(rng.integers(1 << 30)))
        t = generate_ba(cfg)
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        density = float(rng.choice([0.3, 0.5, 0.7, 1.0]))
        try:
            q = extract_query(t, QueryExtractConfig(k, density, int(rng.integers(1 << 30)), 20))
        except ExtractionError:
            continue
        text = q.to_cypher()
        # parsing numbers entities by first mention, so use the parsed graph
        return Instance(seed, t, build_target_index(t), compile_query(parse(text)).graph, text)


@functools.lru_cache(maxsize=None)
def instance_suite(count: int = 200, base_seed: int = 20240) -> tuple:
    return tuple(make_instance(base_seed + i) for i in range(count))


def engine_mappings(idx: TargetIndex, text: str, **opts) -> list:
    occ = occurrences(idx, text, EngineOptions(**opts))
    return [(o.node_map, o.edge_map) for o in occ]


# -- properties and WHERE clauses for OR-split checks ----------------------------

def with_properties(t: Multigraph, seed: int) -> Multigraph:
    rng = np.random.default_rng(seed)
    words = ["alpha", "beta", "gamma", "delta", "alpine", "bet"]
    nodes = []
    for nd in t.nodes:
        p = {}
        if rng.random() < 0.85:
            p["x"] = int(rng.integers(0, 5))
        if rng.random() < 0.7:
            p["name"] = str(rng.choice(words))
        nodes.append(Node(nd.id, nd.labels, p))
    edges = []
    for ed in t.edges:
        p = {}
        if rng.random() < 0.85:
            p["w"] = int(rng.integers(0, 4))
        edges.append(Edge(ed.id, ed.src, ed.dst, ed.etype, p))
    return Multigraph(nodes, edges)


def random_atom(rng, q: QueryGraph, t: Multigraph) -> Atom:
    node = lambda: q.node_name(int(rng.integers(q.n_nodes)))
    edge = lambda: q.edge_name(int(rng.integers(q.n_edges)))
    kind = int(rng.integers(7))
    ops = ["<", "<=", ">", ">=", "=", "!="]
    if kind == 0:
        return Atom(Accessor(node(), "prop", "x"), str(rng.choice(ops)), Const(int(rng.integers(0, 5))))
    if kind == 1:
        return Atom(Accessor(edge(), "prop", "w"), str(rng.choice(ops)), Const(int(rng.integers(0, 4))))
    if kind == 2:
        a, b = node(), node()
        return Atom(Accessor(a, "prop", "x"), str(rng.choice(ops)), Accessor(b, "prop", "x"))
    if kind == 3:
        op = str(rng.choice(["STARTS WITH", "ENDS WITH", "CONTAINS"]))
        return Atom(Accessor(node(), "prop", "name"), op, Const(str(rng.choice(["al", "a", "et", "ph"]))))
    if kind == 4:
        return Atom(Accessor(edge(), "type"), "=", Const(str(rng.choice(t.type_alphabet))))
    if kind == 5:
        return Atom(Accessor(node(), "labels"), "CONTAINS", Const(str(rng.choice(t.label_alphabet))))
    return Atom(Accessor(edge(), "prop", "w"), str(rng.choice(ops)), Accessor(edge(), "prop", "w"))


def random_or_where(rng, q: QueryGraph, t: Multigraph):
    """A proposition whose DNF has two or three terms."""
    a = lambda: random_atom(rng, q, t)
    maybe_not = lambda p: Not(p) if rng.random() < 0.3 else p
    shape = int(rng.integers(3))
    if shape == 0:
        return Or((maybe_not(a()), maybe_not(a())))
    if shape == 1:
        return Or((a(), maybe_not(a()), a()))
    return And((Or((a(), maybe_not(a()))), maybe_not(a())))


def where_text(p) -> str:
    if isinstance(p, Atom):
        rhs = p.rhs
        if isinstance(rhs, Const):
            v = rhs.value
            rhs_text = f'"{v}"' if isinstance(v, str) else str(v).lower() if isinstance(v, bool) else str(v)
        else:
            rhs_text = str(rhs)
        return f"{p.lhs} {p.op} {rhs_text}"
    if isinstance(p, Not):
        return f"NOT ({where_text(p.child)})"
    joiner = " AND " if isinstance(p, And) else " OR "
    return "(" + joiner.join(where_text(c) for c in p.children) + ")"
