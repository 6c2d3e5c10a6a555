"""WHERE normalisation: negation push-down, DNF expansion and OR splitting."""

from __future__ import annotations

import dataclasses
from itertools import product

from .ast import COMPLEMENT, Accessor, And, Atom, Literal, Not, Or, Proposition, QueryAst

DOMAIN_TIME = "domain-time"
MATCH_TIME = "match-time"


def _nnf(p: Proposition, negate: bool):
    if isinstance(p, Atom):
        if not negate:
            return Literal(p)
        if p.op in COMPLEMENT:
            return Literal(Atom(p.lhs, COMPLEMENT[p.op], p.rhs))
        return Literal(p, negated=True)
    if isinstance(p, Not):
        return _nnf(p.child, not negate)
    children = tuple(_nnf(c, negate) for c in p.children)
    is_and = isinstance(p, And)
    if negate:
        is_and = not is_and
    return ("and" if is_and else "or", children)


def _expand(node) -> list[list[Literal]]:
    if isinstance(node, Literal):
        return [[node]]
    kind, children = node
    parts = [_expand(c) for c in children]
    if kind == "or":
        return [term for part in parts for term in part]
    return [[lit for term in combo for lit in term] for combo in product(*parts)]


def to_dnf(p: Proposition) -> list[list[Literal]]:
    """Disjunction of conjunctions equivalent to ``p``.

    Negations are pushed to the atoms; a negated relational atom becomes
    the complementary comparison, a negated string test stays a negated
    literal.  Terms are returned in expansion order without simplification.
    """
    return _expand(_nnf(p, False))


def literal_to_proposition(lit: Literal) -> Proposition:
    return Not(lit.atom) if lit.negated else lit.atom


def conjunction(literals: list[Literal]) -> Proposition:
    if len(literals) == 1:
        return literal_to_proposition(literals[0])
    return And(tuple(literal_to_proposition(l) for l in literals))


def split_on_or(q: QueryAst) -> list[QueryAst]:
    """One query per DNF term of the WHERE clause, sharing MATCH and RETURN."""
    if q.where is None:
        return [q]
    return [dataclasses.replace(q, where=conjunction(term)) for term in to_dnf(q.where)]


def classify_condition(atom: Atom) -> str:
    """Constant comparisons (and comparisons within one entity) are checked per
    node/edge ahead of the search; two-entity comparisons during the search."""
    if isinstance(atom.rhs, Accessor) and atom.rhs.entity != atom.lhs.entity:
        return MATCH_TIME
    return DOMAIN_TIME
