"""Brute-force reference matcher for tests.

It reads only the graph objects (no index, domains, ordering or search
kernels) and evaluates WHERE propositions with its own evaluator, directly
on the proposition tree.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import permutations, product

from .cypher.ast import Accessor, And, Atom, Const, Not, Or
from .graph import Multigraph
from .query import QueryGraph

DEFAULT_NODE_CAP = 30
DEFAULT_EDGE_CAP = 150


class OracleCapError(ValueError):
    pass


@dataclass
class OracleResult:
    mappings: list = field(default_factory=list)  # (f, g) tuples
    classes: dict = field(default_factory=dict)  # edge image -> list of mappings

    @property
    def n_mappings(self) -> int:
        return len(self.mappings)

    @property
    def n_classes(self) -> int:
        return len(self.classes)


# -- own value semantics -----------------------------------------------------

def _kind(v):
    if isinstance(v, bool):
        return 0
    if isinstance(v, (int, float)):
        return 1
    return 2


def _eq(a, b) -> bool:
    return _kind(a) == _kind(b) and a == b


def _props_ok(have: dict, want: dict) -> bool:
    return all(k in have and _eq(have[k], v) for k, v in want.items())


class OracleEvaluationError(ValueError):
    pass


_UNKNOWN = None


def _atom_value(atom: Atom, fetch):
    lhs = fetch(atom.lhs)
    rhs = atom.rhs.value if isinstance(atom.rhs, Const) else fetch(atom.rhs)
    if lhs is _MISS or rhs is _MISS:
        return _UNKNOWN
    op = atom.op
    if isinstance(lhs, frozenset) or isinstance(rhs, frozenset):
        as_set = lambda x: x if isinstance(x, frozenset) else frozenset([x])
        if op == "CONTAINS":
            return rhs <= lhs if isinstance(rhs, frozenset) else rhs in lhs
        if op == "=":
            return as_set(lhs) == as_set(rhs)
        if op == "!=":
            return as_set(lhs) != as_set(rhs)
        raise OracleEvaluationError(op)
    if op in ("STARTS WITH", "ENDS WITH", "CONTAINS"):
        if not (isinstance(lhs, str) and isinstance(rhs, str)):
            return _UNKNOWN
        return {"STARTS WITH": lhs.startswith, "ENDS WITH": lhs.endswith,
                "CONTAINS": lhs.__contains__}[op](rhs)
    if op == "=":
        return _eq(lhs, rhs)
    if op == "!=":
        return not _eq(lhs, rhs)
    if _kind(lhs) != _kind(rhs):
        raise OracleEvaluationError(f"cannot order {lhs!r} and {rhs!r}")
    return {"<": lhs < rhs, "<=": lhs <= rhs, ">": lhs > rhs, ">=": lhs >= rhs}[op]


def _truth(p, fetch):
    """Kleene three-valued evaluation; None stands for unknown."""
    if isinstance(p, Atom):
        return _atom_value(p, fetch)
    if isinstance(p, Not):
        v = _truth(p.child, fetch)
        return None if v is None else not v
    vals = [_truth(c, fetch) for c in p.children]
    if isinstance(p, And):
        if any(v is False for v in vals):
            return False
        return None if any(v is None for v in vals) else True
    if any(v is True for v in vals):
        return True
    return None if any(v is None for v in vals) else False


_MISS = object()


def _fetcher(t: Multigraph, names: dict, f, g):
    def fetch(acc: Accessor):
        kind, i = names[acc.entity]
        if kind == "node":
            nd = t.nodes[f[i]]
            if acc.kind == "labels":
                return nd.labels
            return nd.properties.get(acc.key, _MISS)
        ed = t.edges[g[i]]
        if acc.kind == "type":
            return ed.etype
        return ed.properties.get(acc.key, _MISS)

    return fetch


# -- enumeration ---------------------------------------------------------------

def _edge_fits(qe, te, f) -> bool:
    if qe.etype is not None and te.etype != qe.etype:
        return False
    if not _props_ok(te.properties, qe.properties):
        return False
    a, b = f[qe.src], f[qe.dst]
    if qe.directed or a == b:
        return te.src == a and te.dst == b
    return {te.src, te.dst} == {a, b}


def oracle_match(
    q: QueryGraph,
    t: Multigraph,
    where=None,
    names: dict | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
    edge_cap: int = DEFAULT_EDGE_CAP,
) -> OracleResult:
    """All mappings (f, g) of ``q`` into ``t``.

    ``where`` is an optional proposition tree; ``names`` maps its entity
    names to ``("node", id)`` / ``("edge", id)``.
    """
    if t.n_nodes > node_cap or t.n_edges > edge_cap:
        raise OracleCapError(
            f"target has {t.n_nodes} nodes / {t.n_edges} edges, above the oracle cap "
            f"{node_cap} / {edge_cap}"
        )
    between: dict[tuple, list] = defaultdict(list)
    for te in t.edges:
        between[(te.src, te.dst)].append(te)
        if te.src != te.dst:
            between[(te.dst, te.src)].append(te)

    n = q.n_nodes
    cands = [
        [nd.id for nd in t.nodes
         if q.nodes[u].labels <= nd.labels and _props_ok(nd.properties, q.nodes[u].properties)]
        for u in range(n)
    ]
    pair_edges: dict[tuple, list] = defaultdict(list)
    for qe in q.edges:
        pair_edges[(min(qe.src, qe.dst), max(qe.src, qe.dst))].append(qe)

    result = OracleResult()
    f = [-1] * n

    def pair_possible(a: int, b: int) -> bool:
        for qe in pair_edges.get((min(a, b), max(a, b)), []):
            if not any(_edge_fits(qe, te, f) for te in between.get((f[qe.src], f[qe.dst]), [])):
                return False
        return True

    def finish() -> None:
        per_pair = []
        for key, qes in pair_edges.items():
            a, b = key
            pool = between.get((f[a], f[b]), [])
            options = []
            for combo in permutations(pool, len(qes)):
                if all(_edge_fits(qe, te, f) for qe, te in zip(qes, combo)):
                    options.append([(qe.id, te.id) for qe, te in zip(qes, combo)])
            if not options:
                return
            per_pair.append(options)
        for choice in product(*per_pair):
            g = [-1] * q.n_edges
            for part in choice:
                for qe_id, te_id in part:
                    g[qe_id] = te_id
            if where is not None and _truth(where, _fetcher(t, names, f, g)) is not True:
                continue
            mapping = (tuple(f), tuple(g))
            result.mappings.append(mapping)
            result.classes.setdefault(frozenset(g), []).append(mapping)

    def extend(u: int) -> None:
        if u == n:
            finish()
            return
        for c in cands[u]:
            if c in f[:u]:
                continue
            f[u] = c
            if all(pair_possible(u, w) for w in range(u + 1)):
                extend(u + 1)
            f[u] = -1

    extend(0)
    return result


def oracle_query(ast, t: Multigraph, **caps) -> OracleResult:
    """Oracle over a parsed query, evaluating its full WHERE proposition."""
    import dataclasses

    from .cypher.compile import compile_query

    plain = compile_query(dataclasses.replace(ast, where=None))
    names = {name: ("node", i) for name, i in plain.node_ids.items()}
    names.update({name: ("edge", i) for name, i in plain.edge_ids.items()})
    return oracle_match(plain.graph, t, ast.where, names, **caps)


def is_valid_mapping(q: QueryGraph, t: Multigraph, node_map, edge_map) -> bool:
    """Direct check of the five matching conditions for one mapping."""
    if len(set(node_map)) != len(node_map) or len(set(edge_map)) != len(edge_map):
        return False
    for qe, te_id in zip(q.edges, edge_map):
        te = t.edges[te_id]
        if not _edge_fits(qe, te, node_map):
            return False
    for qn, tn in zip(q.nodes, node_map):
        nd = t.nodes[tn]
        if not (qn.labels <= nd.labels and _props_ok(nd.properties, qn.properties)):
            return False
    return True
