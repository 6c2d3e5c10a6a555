"""Syntax tree of the supported Cypher subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..graph import PropertyValue


@dataclass
class NodePattern:
    name: str
    labels: frozenset = frozenset()
    properties: dict = field(default_factory=dict)
    anonymous: bool = False


@dataclass
class EdgePattern:
    name: str
    left: str
    right: str
    direction: str  # "->", "<-" or "-"
    etype: str | None = None
    properties: dict = field(default_factory=dict)
    anonymous: bool = False

    @property
    def undirected(self) -> bool:
        return self.direction == "-"


@dataclass(frozen=True)
class Accessor:
    entity: str
    kind: str  # "prop", "labels" or "type"
    key: str | None = None

    def __str__(self) -> str:
        if self.kind == "prop":
            return f"{self.entity}.{self.key}"
        return f"{self.kind}({self.entity})"


@dataclass(frozen=True)
class Const:
    value: PropertyValue

    def __str__(self) -> str:
        return repr(self.value)


Operand = Union[Accessor, Const]

RELATIONAL_OPS = ("<", "<=", ">", ">=", "=", "!=")
STRING_OPS = ("STARTS WITH", "ENDS WITH", "CONTAINS")
COMPLEMENT = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "=": "!=", "!=": "="}
MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "=", "!=": "!="}


@dataclass(frozen=True)
class Atom:
    lhs: Accessor
    op: str
    rhs: Operand

    def entities(self) -> frozenset:
        ents = {self.lhs.entity}
        if isinstance(self.rhs, Accessor):
            ents.add(self.rhs.entity)
        return frozenset(ents)

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class Not:
    child: "Proposition"


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


Proposition = Union[Atom, Not, And, Or]


@dataclass(frozen=True)
class Literal:
    """A possibly negated atom inside a DNF conjunction."""

    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"NOT {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class ReturnItem:
    kind: str  # "prop", "labels", "type", "entity", "nodes", "relationships"
    entity: str | None = None
    key: str | None = None

    def header(self) -> str:
        if self.kind == "prop":
            return f"{self.entity}.{self.key}"
        if self.kind == "entity":
            return self.entity
        if self.kind in ("nodes", "relationships"):
            return f"{self.kind}()"
        return f"{self.kind}({self.entity})"


@dataclass
class ReturnSpec:
    kind: str  # "count" or "rows"
    items: list = field(default_factory=list)
    limit: int | None = None


@dataclass
class QueryAst:
    nodes: list  # NodePattern, in order of first mention
    edges: list  # EdgePattern, in order of appearance
    where: Proposition | None
    ret: ReturnSpec

    def node(self, name: str) -> NodePattern | None:
        return next((n for n in self.nodes if n.name == name), None)

    def edge(self, name: str) -> EdgePattern | None:
        return next((e for e in self.edges if e.name == name), None)
