"""Parser for the Cypher subset; see ``grammar.lark`` for the accepted syntax."""

from __future__ import annotations

import ast as _pyast
from functools import lru_cache
from importlib import resources

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from . import ast
from .ast import MIRROR, Accessor, Atom, Const, EdgePattern, NodePattern, QueryAst, ReturnItem, ReturnSpec


class CypherError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class CypherSyntaxError(CypherError):
    pass


class CypherSemanticError(CypherError):
    pass


@lru_cache(maxsize=1)
def _parser() -> Lark:
    grammar = resources.files(__package__).joinpath("grammar.lark").read_text()
    return Lark(grammar, parser="lalr", lexer="contextual", propagate_positions=True)


def _name(tok: Token) -> str:
    s = str(tok)
    if s.startswith("`"):
        return s[1:-1].replace("``", "`")
    return s


class _Pos:
    def __init__(self, tok):
        self.line = getattr(tok, "line", None)
        self.column = getattr(tok, "column", None)


@v_args(inline=True)
class _Build(Transformer):
    # literals
    def string(self, tok):
        body = str(tok)[1:-1]
        quote = str(tok)[0]
        # reuse Python's escape handling; quotes of the other kind need no escape
        return Const(_pyast.literal_eval(quote + body + quote))

    def int(self, tok):
        value = int(str(tok))
        if not -(2**63) <= value < 2**63:
            raise CypherSyntaxError(f"integer literal {value} out of 64-bit range", tok.line, tok.column)
        return Const(value)

    def float(self, tok):
        return Const(float(str(tok)))

    def true(self):
        return Const(True)

    def false(self):
        return Const(False)

    # MATCH
    def label_list(self, *names):
        return ("labels", frozenset(_name(n) for n in names))

    def prop_pair(self, key, value):
        return (_name(key), value.value)

    def prop_map(self, *pairs):
        out = {}
        for pair in pairs:
            if pair is None:
                continue
            key, value = pair
            out[key] = value
        return ("props", out)

    def rel_type(self, name):
        return ("type", _name(name))

    def node_pattern(self, *parts):
        name, labels, props = None, frozenset(), {}
        pos = None
        for part in parts:
            if isinstance(part, Token):
                name = _name(part)
                pos = _Pos(part)
            elif part[0] == "labels":
                labels = part[1]
            else:
                props = part[1]
        return ("node", name, labels, props, pos)

    def rel_detail(self, *parts):
        name, etype, props, pos = None, None, {}, None
        for part in parts:
            if isinstance(part, Token):
                name = _name(part)
                pos = _Pos(part)
            elif part[0] == "type":
                etype = part[1]
            else:
                props = part[1]
        return (name, etype, props, pos)

    def rel_pattern(self, *parts):
        left = right = False
        detail = (None, None, {}, None)
        for part in parts:
            if isinstance(part, Token):
                if part.type == "LARROW":
                    left = True
                elif part.type == "RARROW":
                    right = True
            else:
                detail = part
        if left and right:
            raise CypherSyntaxError("relationship cannot point both ways")
        direction = "<-" if left else "->" if right else "-"
        return ("rel", direction, detail)

    def path(self, *items):
        return list(items)

    def match_clause(self, *paths):
        return ("match", list(paths))

    # WHERE
    def prop_access(self, entity, key):
        return Accessor(_name(entity), "prop", _name(key))

    def labels_access(self, entity):
        return Accessor(_name(entity), "labels")

    def type_access(self, entity):
        return Accessor(_name(entity), "type")

    def starts_with(self):
        return "STARTS WITH"

    def ends_with(self):
        return "ENDS WITH"

    def contains(self):
        return "CONTAINS"

    def comparison(self, lhs, op, rhs):
        op = str(op)
        if op == "<>":
            op = "!="
        if isinstance(lhs, Const) and isinstance(rhs, Const):
            raise CypherSemanticError(f"comparison between two constants: {lhs} {op} {rhs}")
        if isinstance(lhs, Const):
            if op not in MIRROR:
                raise CypherSemanticError(f"left operand of {op} must be an accessor")
            lhs, rhs, op = rhs, lhs, MIRROR[op]
        return Atom(lhs, op, rhs)

    def negation(self, child):
        return ast.Not(child)

    def and_expr(self, *children):
        return ast.And(tuple(children))

    def or_expr(self, *children):
        return ast.Or(tuple(children))

    def where_clause(self, prop):
        return ("where", prop)

    # RETURN
    def return_count(self, *_):
        return ("count", [])

    def return_rows(self, *items):
        return ("rows", list(items))

    def item_prop(self, entity, key):
        return ReturnItem("prop", _name(entity), _name(key))

    def item_entity(self, entity):
        return ReturnItem("entity", _name(entity))

    def item_labels(self, entity):
        return ReturnItem("labels", _name(entity))

    def item_type(self, entity):
        return ReturnItem("type", _name(entity))

    def item_nodes(self, *_):
        return ReturnItem("nodes")

    def item_relationships(self, *_):
        return ReturnItem("relationships")

    def limit(self, tok):
        value = int(str(tok))
        if value < 1:
            raise CypherSemanticError("LIMIT must be at least 1", tok.line, tok.column)
        return value

    def return_clause(self, body, limit=None):
        kind, items = body
        return ("return", ReturnSpec(kind, items, limit))


def parse(text: str) -> QueryAst:
    """Parse query text into a :class:`QueryAst`.

    Raises :class:`CypherSyntaxError` (with line/column) for text outside
    the grammar and :class:`CypherSemanticError` for undeclared names,
    conflicting patterns or a MATCH without relationships.
    """
    try:
        tree = _parser().parse(text)
    except UnexpectedInput as exc:
        raise CypherSyntaxError(f"unexpected input: {_context(exc, text)}", exc.line, exc.column) from None
    try:
        parts = _Build().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, CypherError):
            raise exc.orig_exc from None
        raise
    clauses = {c[0]: c[1] for c in parts.children}
    return _assemble(clauses["match"], clauses.get("where"), clauses["return"])


def _context(exc: UnexpectedInput, text: str) -> str:
    try:
        return repr(exc.get_context(text, span=20).splitlines()[0].strip())
    except Exception:  # pragma: no cover - context is best effort
        return "?"


def _assemble(paths, where, ret: ReturnSpec) -> QueryAst:
    nodes: dict[str, NodePattern] = {}
    edges: list[EdgePattern] = []
    edge_names: set[str] = set()
    fresh = 0

    def node_ref(item) -> str:
        nonlocal fresh
        _, name, labels, props, pos = item
        if name is None:
            name = f"_anon_n{fresh}"
            fresh += 1
            nodes[name] = NodePattern(name, labels, dict(props), anonymous=True)
            return name
        if name in edge_names:
            raise CypherSemanticError(f"{name!r} is already a relationship", pos.line, pos.column)
        if name in nodes:
            existing = nodes[name]
            existing.labels = existing.labels | labels
            for key, value in props.items():
                if key in existing.properties and existing.properties[key] != value:
                    raise CypherSemanticError(
                        f"conflicting values for {name}.{key}", pos.line, pos.column
                    )
                existing.properties[key] = value
        else:
            nodes[name] = NodePattern(name, labels, dict(props))
        return name

    for path in paths:
        prev = node_ref(path[0])
        for i in range(1, len(path), 2):
            _, direction, (name, etype, props, pos) = path[i]
            nxt = node_ref(path[i + 1])
            anonymous = name is None
            if anonymous:
                name = f"_anon_r{fresh}"
                fresh += 1
            elif name in edge_names:
                raise CypherSemanticError(f"relationship {name!r} bound twice", pos.line, pos.column)
            elif name in nodes:
                raise CypherSemanticError(f"{name!r} is already a node", pos.line, pos.column)
            edge_names.add(name)
            edges.append(EdgePattern(name, prev, nxt, direction, etype, dict(props), anonymous))
            prev = nxt

    if not edges:
        raise CypherSemanticError("MATCH must contain at least one relationship pattern")

    declared = set(nodes) | edge_names
    if where is not None:
        for atom in _atoms(where):
            for acc in (atom.lhs, atom.rhs):
                if isinstance(acc, Accessor):
                    _check_declared(acc.entity, declared)
                    if acc.kind == "type" and acc.entity not in edge_names:
                        raise CypherSemanticError(f"type() applied to node {acc.entity!r}")
                    if acc.kind == "labels" and acc.entity not in nodes:
                        raise CypherSemanticError(f"labels() applied to relationship {acc.entity!r}")
            if atom.op in ast.STRING_OPS:
                for side in (atom.lhs, atom.rhs):
                    if isinstance(side, Const) and not isinstance(side.value, str):
                        raise CypherSemanticError(f"{atom.op} needs text operands")
    for item in ret.items:
        if item.entity is not None:
            _check_declared(item.entity, declared)
    return QueryAst(list(nodes.values()), edges, where, ret)


def _check_declared(name: str, declared: set[str]) -> None:
    if name not in declared:
        raise CypherSemanticError(f"{name!r} is not declared in MATCH")


def _atoms(prop):
    if isinstance(prop, Atom):
        yield prop
    elif isinstance(prop, ast.Not):
        yield from _atoms(prop.child)
    else:
        for child in prop.children:
            yield from _atoms(child)
