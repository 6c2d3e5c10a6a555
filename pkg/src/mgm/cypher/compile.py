"""Turn a conjunctive query AST into a query graph plus per-element filters."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..query import QueryEdge, QueryGraph, QueryNode
from .ast import Accessor, Atom, Const, Literal, QueryAst, ReturnSpec
from .dnf import DOMAIN_TIME, classify_condition, to_dnf
from .parser import CypherSemanticError


@dataclass
class CompiledQuery:
    graph: QueryGraph
    node_ids: dict
    edge_ids: dict
    node_literals: list  # per query node: literals checked against one target node
    edge_literals: list  # per query edge: literals checked against one target edge
    match_literals: list  # literals relating two entities
    ret: ReturnSpec
    unsatisfiable: bool = False
    referenced: set = field(default_factory=set)  # entity names used in WHERE

    def entity(self, name: str) -> tuple[str, int]:
        if name in self.node_ids:
            return "node", self.node_ids[name]
        return "edge", self.edge_ids[name]


def referenced_entities(q: QueryAst) -> set[str]:
    if q.where is None:
        return set()
    names = set()
    for term in to_dnf(q.where):
        for lit in term:
            names |= lit.atom.entities()
    return names


def compile_query(q: QueryAst) -> CompiledQuery:
    """Compile a query whose WHERE clause (if any) is a single conjunction.

    Positive ``type(r) = "T"`` and ``labels(a) CONTAINS "L"`` literals are
    folded into the pattern so that the index can prune on them.
    """
    node_ids = {n.name: i for i, n in enumerate(q.nodes)}
    edge_ids = {e.name: i for i, e in enumerate(q.edges)}
    labels = [set(n.labels) for n in q.nodes]
    etypes = [e.etype for e in q.edges]
    unsat = False

    literals: list[Literal] = []
    if q.where is not None:
        terms = to_dnf(q.where)
        if len(terms) != 1:
            raise ValueError("compile_query expects a conjunctive WHERE; split on OR first")
        literals = terms[0]

    node_lits: list[list[Literal]] = [[] for _ in q.nodes]
    edge_lits: list[list[Literal]] = [[] for _ in q.edges]
    match_lits: list[Literal] = []
    for lit in literals:
        atom = lit.atom
        _validate(atom)
        folded = False
        if not lit.negated and isinstance(atom.rhs, Const) and isinstance(atom.rhs.value, str):
            acc = atom.lhs
            if acc.kind == "type" and atom.op == "=":
                e = edge_ids[acc.entity]
                if etypes[e] is not None and etypes[e] != atom.rhs.value:
                    unsat = True
                etypes[e] = atom.rhs.value
                folded = True
            elif acc.kind == "labels" and atom.op == "CONTAINS":
                labels[node_ids[acc.entity]].add(atom.rhs.value)
                folded = True
        if folded:
            continue
        if classify_condition(atom) == DOMAIN_TIME:
            name = atom.lhs.entity
            if name in node_ids:
                node_lits[node_ids[name]].append(lit)
            else:
                edge_lits[edge_ids[name]].append(lit)
        else:
            match_lits.append(lit)

    nodes = [
        QueryNode(i, frozenset(labels[i]), dict(n.properties), n.name)
        for i, n in enumerate(q.nodes)
    ]
    edges = []
    for i, e in enumerate(q.edges):
        src, dst = node_ids[e.left], node_ids[e.right]
        if e.direction == "<-":
            src, dst = dst, src
        edges.append(QueryEdge(i, src, dst, etypes[i], dict(e.properties), not e.undirected, e.name))
    return CompiledQuery(
        QueryGraph(nodes, edges), node_ids, edge_ids, node_lits, edge_lits, match_lits,
        q.ret, unsat, referenced_entities(q),
    )


def _validate(atom: Atom) -> None:
    for side in (atom.lhs, atom.rhs):
        if isinstance(side, Accessor) and side.kind == "labels":
            if atom.op not in ("=", "!=", "CONTAINS"):
                raise CypherSemanticError(f"operator {atom.op} is not defined on labels()")
    if atom.op == "CONTAINS" and isinstance(atom.rhs, Accessor) and atom.rhs.kind == "labels":
        raise CypherSemanticError("labels() cannot be the right operand of CONTAINS")
