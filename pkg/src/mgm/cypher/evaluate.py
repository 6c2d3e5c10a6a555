"""Truth of WHERE literals against concrete target elements.

Missing properties make a comparison unknown (``None``), which never
satisfies a literal, negated or not.  Ordering between values of different
kinds raises :class:`QueryEvaluationError`.
"""

from __future__ import annotations

from typing import Callable

from ..graph import PropertyKindError, compare_values, values_equal
from .ast import Accessor, Atom, Const, Literal

_MISSING = object()


class QueryEvaluationError(ValueError):
    pass


def _string_op(op: str, a, b) -> bool | None:
    if not isinstance(a, str) or not isinstance(b, str):
        return None
    if op == "STARTS WITH":
        return a.startswith(b)
    if op == "ENDS WITH":
        return a.endswith(b)
    return b in a


def compare(op: str, a, b) -> bool | None:
    """Three-valued comparison of two resolved operand values."""
    if a is _MISSING or b is _MISSING:
        return None
    if isinstance(a, frozenset) or isinstance(b, frozenset):
        return _labels_op(op, a, b)
    if op in ("STARTS WITH", "ENDS WITH", "CONTAINS"):
        return _string_op(op, a, b)
    if op == "=":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    try:
        c = compare_values(a, b)
    except PropertyKindError as exc:
        raise QueryEvaluationError(str(exc)) from None
    return {"<": c < 0, "<=": c <= 0, ">": c > 0, ">=": c >= 0}[op]


def _labels_op(op: str, a, b) -> bool:
    # labels(x) = "L" means exactly {L}; CONTAINS tests membership
    as_set = lambda v: v if isinstance(v, frozenset) else frozenset([v])
    if op == "CONTAINS":
        if not isinstance(a, frozenset):
            raise QueryEvaluationError("CONTAINS on labels() needs labels() on the left")
        return b in a if not isinstance(b, frozenset) else b <= a
    if op == "=":
        return as_set(a) == as_set(b)
    if op == "!=":
        return as_set(a) != as_set(b)
    raise QueryEvaluationError(f"operator {op} is not defined on labels()")


Resolver = Callable[[Accessor], object]


def literal_truth(lit: Literal, resolve: Resolver) -> bool:
    """True iff the literal holds; unknown counts as not holding."""
    atom = lit.atom
    lhs = resolve(atom.lhs)
    rhs = atom.rhs.value if isinstance(atom.rhs, Const) else resolve(atom.rhs)
    value = compare(atom.op, lhs, rhs)
    if value is None:
        return False
    return (not value) if lit.negated else value


def node_resolver(labels: frozenset, props: dict, entity_lookup=None) -> Resolver:
    def resolve(acc: Accessor):
        if acc.kind == "labels":
            return labels
        if acc.kind == "prop":
            return props.get(acc.key, _MISSING)
        raise QueryEvaluationError(f"type() applied to node {acc.entity!r}")

    return resolve


def edge_resolver(etype: str, props: dict) -> Resolver:
    def resolve(acc: Accessor):
        if acc.kind == "type":
            return etype
        if acc.kind == "prop":
            return props.get(acc.key, _MISSING)
        raise QueryEvaluationError(f"labels() applied to relationship {acc.entity!r}")

    return resolve


def element_value(acc: Accessor, is_node: bool, target, element: int):
    if is_node:
        nd = target.nodes[element]
        return node_resolver(nd.labels, nd.properties)(acc)
    e = target.edges[element]
    return edge_resolver(e.etype, e.properties)(acc)


MISSING = _MISSING
__all__ = ["Atom", "QueryEvaluationError", "compare", "literal_truth", "MISSING"]
