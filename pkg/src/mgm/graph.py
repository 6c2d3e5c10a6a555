"""Labeled, attributed multigraph model shared by query execution and I/O.

Node and edge ids are dense (``0..n-1`` / ``0..m-1``) inside a
:class:`Multigraph`.  Ids read from files may be sparse; the loader remaps
them in ascending order, so relative id order is preserved, and keeps the
original value in the reserved ``_orig_id`` property.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Union

import numpy as np

PropertyValue = Union[str, int, float, bool]
Properties = Mapping[str, PropertyValue]

UNLABELED = "_unlabeled"
ORIG_ID = "_orig_id"

OUT = 0
IN = 1


class GraphLoadError(ValueError):
    """Malformed graph input; the message names the file and line."""


class PropertyKindError(TypeError):
    """Ordering comparison between values of different kinds."""


def value_kind(value: PropertyValue) -> str:
    # bool is a subclass of int, so it has to be tested first
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, np.integer)):
        return "num"
    if isinstance(value, (float, np.floating)):
        return "num"
    if isinstance(value, str):
        return "str"
    raise TypeError(f"unsupported property value {value!r}")


def values_equal(a: PropertyValue, b: PropertyValue) -> bool:
    """Kind-aware equality: ``5 != "5"`` and ``True != 1``; ints and floats compare numerically."""
    if value_kind(a) != value_kind(b):
        return False
    return a == b


def compare_values(a: PropertyValue, b: PropertyValue) -> int:
    ka, kb = value_kind(a), value_kind(b)
    if ka != kb:
        raise PropertyKindError(f"cannot order {a!r} against {b!r}")
    return (a > b) - (a < b)


def properties_contain(container: Properties, wanted: Properties) -> bool:
    """True iff every (key, value) pair of ``wanted`` is present in ``container``."""
    for key, value in wanted.items():
        if key not in container or not values_equal(container[key], value):
            return False
    return True


def check_property_value(value: object) -> PropertyValue:
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, int):
        if not -(2**63) <= value < 2**63:
            raise ValueError(f"integer {value} does not fit in 64 bits")
        return value
    if isinstance(value, float):
        return value
    raise ValueError(f"unsupported property value {value!r}")


@dataclass(frozen=True)
class Node:
    id: int
    labels: frozenset
    properties: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class Edge:
    id: int
    src: int
    dst: int
    etype: str
    properties: dict = field(default_factory=dict, compare=False, hash=False)


class Multigraph:
    """Immutable directed multigraph with node label sets and one type per edge.

    Besides the object view (``nodes``/``edges``) the graph keeps flat numpy
    arrays (``src``, ``dst``, ``etype_idx``) and CSR adjacency, which is what
    the index builder and the search kernels consume.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge]):
        self.nodes: list[Node] = list(nodes)
        self.edges: list[Edge] = list(edges)
        n, m = len(self.nodes), len(self.edges)
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node ids must be dense; position {i} holds id {node.id}")
            if not node.labels:
                raise ValueError(f"node {i} has no labels")
        for i, edge in enumerate(self.edges):
            if edge.id != i:
                raise ValueError(f"edge ids must be dense; position {i} holds id {edge.id}")
            if not (0 <= edge.src < n and 0 <= edge.dst < n):
                raise ValueError(f"edge {i} has a dangling endpoint")

        self.label_alphabet: list[str] = sorted({lab for nd in self.nodes for lab in nd.labels})
        self.type_alphabet: list[str] = sorted({e.etype for e in self.edges})
        self.label_index = {lab: k for k, lab in enumerate(self.label_alphabet)}
        self.type_index = {t: k for k, t in enumerate(self.type_alphabet)}

        self.src = np.fromiter((e.src for e in self.edges), dtype=np.int64, count=m)
        self.dst = np.fromiter((e.dst for e in self.edges), dtype=np.int64, count=m)
        self.etype_idx = np.fromiter(
            (self.type_index[e.etype] for e in self.edges), dtype=np.int64, count=m
        )
        self.out_ptr, self.out_eid = _csr(self.src, self.dst, n)
        self.in_ptr, self.in_eid = _csr(self.dst, self.src, n)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def out_edges(self, u: int) -> np.ndarray:
        return self.out_eid[self.out_ptr[u] : self.out_ptr[u + 1]]

    def in_edges(self, u: int) -> np.ndarray:
        return self.in_eid[self.in_ptr[u] : self.in_ptr[u + 1]]

    def out_degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.out_ptr[u + 1] - self.out_ptr[u])

    def in_degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.in_ptr[u + 1] - self.in_ptr[u])

    def total_degree(self, u: int) -> int:
        return self.out_degree(u) + self.in_degree(u)

    def neighbors(self, u: int) -> set[int]:
        self._check_node(u)
        out = self.dst[self.out_edges(u)]
        inn = self.src[self.in_edges(u)]
        return set(out.tolist()) | set(inn.tolist())

    def t_degree(self, u: int, etype: str, direction: str) -> int:
        """Number of ``etype`` edges leaving (``"out"``) or entering (``"in"``) ``u``."""
        self._check_node(u)
        if direction not in ("in", "out"):
            raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
        k = self.type_index.get(etype)
        if k is None:
            return 0
        eids = self.out_edges(u) if direction == "out" else self.in_edges(u)
        return int(np.count_nonzero(self.etype_idx[eids] == k))

    def orig_node_id(self, u: int) -> int:
        return self.nodes[u].properties.get(ORIG_ID, u)

    def orig_edge_id(self, e: int) -> int:
        return self.edges[e].properties.get(ORIG_ID, e)

    def _check_node(self, u: int) -> None:
        if not 0 <= u < len(self.nodes):
            raise KeyError(f"unknown node id {u}")

    def __repr__(self) -> str:
        return f"Multigraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _csr(keys: np.ndarray, other: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge ids grouped by ``keys``, each group sorted by (other endpoint, edge id)."""
    m = len(keys)
    order = np.lexsort((np.arange(m), other, keys)).astype(np.int64)
    counts = np.bincount(keys, minlength=n) if m else np.zeros(n, dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order


def build_graph(
    node_rows: Iterable[tuple[int, Iterable[str], Properties]],
    edge_rows: Iterable[tuple[int, int, int, str, Properties]],
) -> Multigraph:
    """Build a graph from rows with arbitrary (possibly sparse) non-negative ids.

    Ids are remapped densely in ascending order; the original id is stored
    under ``_orig_id``.  Label-less nodes receive the ``_unlabeled`` label.
    """
    node_rows = sorted(node_rows, key=lambda r: r[0])
    remap: dict[int, int] = {}
    nodes = []
    for i, (orig, labels, props) in enumerate(node_rows):
        if orig in remap:
            raise ValueError(f"duplicate node id {orig}")
        remap[orig] = i
        labels = frozenset(labels) or frozenset([UNLABELED])
        nodes.append(Node(i, labels, {**props, ORIG_ID: orig}))
    edge_rows = sorted(edge_rows, key=lambda r: r[0])
    edges = []
    seen: set[int] = set()
    for i, (orig, src, dst, etype, props) in enumerate(edge_rows):
        if orig in seen:
            raise ValueError(f"duplicate edge id {orig}")
        seen.add(orig)
        if src not in remap or dst not in remap:
            raise ValueError(f"edge {orig} references an unknown node")
        edges.append(Edge(i, remap[src], remap[dst], etype, {**props, ORIG_ID: orig}))
    return Multigraph(nodes, edges)


def _parse_props(text: str) -> dict:
    text = text.strip()
    if not text:
        return {}
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("properties must be a JSON object")
    return {str(k): check_property_value(v) for k, v in obj.items()}


def _parse_id(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"negative id {value}")
    return value


def load_graph(nodes_file: str | Path, edges_file: str | Path) -> Multigraph:
    """Read the canonical nodes/edges CSV pair.

    Nodes: ``id,labels,properties`` with ``;``-separated labels and a JSON
    object for properties.  Edges: ``id,src,dst,type,properties``.
    """
    node_rows = []
    node_ids: set[int] = set()
    for lineno, row in _read_rows(nodes_file, ["id", "labels", "properties"]):
        try:
            nid = _parse_id(row[0])
            if nid in node_ids:
                raise ValueError(f"duplicate node id {nid}")
            node_ids.add(nid)
            labels = [lab for lab in (s.strip() for s in row[1].split(";")) if lab]
            node_rows.append((nid, labels, _parse_props(row[2])))
        except ValueError as exc:
            raise GraphLoadError(f"{nodes_file}:{lineno}: {exc}") from None

    edge_rows = []
    edge_ids: set[int] = set()
    for lineno, row in _read_rows(edges_file, ["id", "src", "dst", "type", "properties"]):
        try:
            eid = _parse_id(row[0])
            if eid in edge_ids:
                raise ValueError(f"duplicate edge id {eid}")
            edge_ids.add(eid)
            src, dst = _parse_id(row[1]), _parse_id(row[2])
            for end in (src, dst):
                if end not in node_ids:
                    raise ValueError(f"dangling endpoint {end}")
            etype = row[3].strip()
            if not etype:
                raise ValueError("missing edge type")
            edge_rows.append((eid, src, dst, etype, _parse_props(row[4])))
        except ValueError as exc:
            raise GraphLoadError(f"{edges_file}:{lineno}: {exc}") from None
    return build_graph(node_rows, edge_rows)


def _read_rows(path: str | Path, header: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise GraphLoadError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise GraphLoadError(f"{path}:1: expected header {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise GraphLoadError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            yield lineno, row


def _dump_props(props: Properties) -> str:
    clean = {k: v for k, v in props.items() if k != ORIG_ID}
    for v in clean.values():
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError("non-finite float properties cannot be written as JSON")
    return json.dumps(clean, ensure_ascii=False, sort_keys=True)


def write_graph(g: Multigraph, nodes_file: str | Path, edges_file: str | Path) -> None:
    """Write ``g`` in the canonical CSV format, restoring original ids."""
    with open(nodes_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "labels", "properties"])
        for nd in g.nodes:
            labels = sorted(nd.labels - {UNLABELED})
            w.writerow([g.orig_node_id(nd.id), ";".join(labels), _dump_props(nd.properties)])
    with open(edges_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "src", "dst", "type", "properties"])
        for e in g.edges:
            w.writerow(
                [
                    g.orig_edge_id(e.id),
                    g.orig_node_id(e.src),
                    g.orig_node_id(e.dst),
                    e.etype,
                    _dump_props(e.properties),
                ]
            )
