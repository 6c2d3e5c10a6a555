"""Query multigraph: like a target graph, but labels may be empty, edge types
optional and edges may be undirected."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import properties_contain


@dataclass
class QueryNode:
    id: int
    labels: frozenset = frozenset()
    properties: dict = field(default_factory=dict)
    name: str | None = None


@dataclass
class QueryEdge:
    id: int
    src: int
    dst: int
    etype: str | None = None
    properties: dict = field(default_factory=dict)
    directed: bool = True
    name: str | None = None


class QueryGraph:
    def __init__(self, nodes: list[QueryNode], edges: list[QueryEdge]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        for i, nd in enumerate(self.nodes):
            if nd.id != i:
                raise ValueError("query node ids must be dense")
        for i, e in enumerate(self.edges):
            if e.id != i:
                raise ValueError("query edge ids must be dense")
            if not (0 <= e.src < len(self.nodes) and 0 <= e.dst < len(self.nodes)):
                raise ValueError(f"query edge {i} has a dangling endpoint")
        self.pairs: dict[tuple[int, int], list[int]] = {}
        for e in self.edges:
            key = (min(e.src, e.dst), max(e.src, e.dst))
            self.pairs.setdefault(key, []).append(e.id)
        self._neigh: list[set[int]] = [set() for _ in self.nodes]
        for e in self.edges:
            self._neigh[e.src].add(e.dst)
            self._neigh[e.dst].add(e.src)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> set[int]:
        return self._neigh[u]

    def total_degree(self, u: int) -> int:
        return sum((e.src == u) + (e.dst == u) for e in self.edges)

    def t_degree(self, u: int, etype: str, direction: str) -> int:
        """Counts only directed edges with a fixed type; others impose no per-type bound."""
        n = 0
        for e in self.edges:
            if not e.directed or e.etype != etype:
                continue
            if direction == "out" and e.src == u:
                n += 1
            elif direction == "in" and e.dst == u:
                n += 1
        return n

    def types(self) -> set[str]:
        return {e.etype for e in self.edges if e.etype is not None}

    def labels(self) -> set[str]:
        return {lab for nd in self.nodes for lab in nd.labels}

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self._neigh[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)

    def node_name(self, u: int) -> str:
        return self.nodes[u].name or f"n{u}"

    def edge_name(self, e: int) -> str:
        return self.edges[e].name or f"r{e}"

    def to_cypher(self, ret: str = "count()") -> str:
        """MATCH text describing this graph (every node and edge named)."""
        parts = []
        declared: set[int] = set()

        def node_text(u: int) -> str:
            nd = self.nodes[u]
            name = self.node_name(u)
            if u in declared:
                return f"({name})"
            declared.add(u)
            labels = "".join(f":{_ident(lab)}" for lab in sorted(nd.labels))
            return f"({name}{labels}{_props_text(nd.properties)})"

        for e in self.edges:
            t = f":{_ident(e.etype)}" if e.etype is not None else ""
            body = f"[{self.edge_name(e.id)}{t}{_props_text(e.properties)}]"
            arrow_l, arrow_r = ("-", "->") if e.directed else ("-", "-")
            parts.append(f"{node_text(e.src)}{arrow_l}{body}{arrow_r}{node_text(e.dst)}")
        return f"MATCH {', '.join(parts)} RETURN {ret}"


def _ident(name: str) -> str:
    if name.isidentifier():
        return name
    return "`" + name.replace("`", "``") + "`"


def _literal_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(v)


def _props_text(props: dict) -> str:
    if not props:
        return ""
    inner = ", ".join(f"{_ident(k)}: {_literal_text(v)}" for k, v in sorted(props.items()))
    return " {" + inner + "}"


def node_compatible(qn: QueryNode, labels: frozenset, props: dict) -> bool:
    return qn.labels <= labels and properties_contain(props, qn.properties)
