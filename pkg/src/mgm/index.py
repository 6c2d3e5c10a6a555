"""Target indexing: node label graph, edge types map, edge property table and
bit signature matrix, plus a binary snapshot format."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import kernels
from .graph import Edge, Multigraph, Node

SNAPSHOT_MAGIC = b"MGMIDX\x00"
SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    pass


def signature_contains(container: np.ndarray, contained: np.ndarray) -> bool:
    """True iff every set bit of ``contained`` is also set in ``container``."""
    container = np.asarray(container, dtype=np.uint64)
    contained = np.asarray(contained, dtype=np.uint64)
    if container.shape != contained.shape:
        raise ValueError(f"signature width mismatch: {container.shape} vs {contained.shape}")
    return bool(np.all((container & contained) == contained))


def swap_signature(words: np.ndarray, h: int, p: int) -> np.ndarray:
    """Row of the reversed pair: exchanges the two label fields and T_in/T_out."""
    bits = unpack_bits(words, 2 * h + 2 * p)
    swapped = np.concatenate(
        [bits[h + 2 * p :], bits[h + p : h + 2 * p], bits[h : h + p], bits[:h]]
    )
    return pack_bits(swapped, len(words))


def unpack_bits(words: np.ndarray, width: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint64)
    idx = np.arange(width)
    return ((words[idx >> 6] >> (idx & 63).astype(np.uint64)) & np.uint64(1)).astype(bool)


def pack_bits(bits: np.ndarray, n_words: int) -> np.ndarray:
    words = np.zeros(n_words, dtype=np.uint64)
    for b in np.nonzero(bits)[0]:
        kernels.set_bit(words, int(b))
    return words


@dataclass
class LabelVertex:
    labels: frozenset
    nodes: np.ndarray  # target node ids carrying exactly ``labels``


class NodeLabelGraph:
    """One vertex per distinct label set in the target.

    Containment edges join each vertex to the vertices whose label sets
    cover it (immediate strict supersets); supersets further up are reached
    transitively.
    """

    def __init__(self, g: Multigraph):
        groups: dict[frozenset, list[int]] = {}
        for nd in g.nodes:
            groups.setdefault(nd.labels, []).append(nd.id)
        keys = sorted(groups, key=lambda s: (len(s), sorted(s)))
        self.vertices = [LabelVertex(k, np.asarray(groups[k], dtype=np.int64)) for k in keys]
        self.edges: dict[int, list[int]] = {i: [] for i in range(len(keys))}
        for i, a in enumerate(keys):
            supers = [j for j, b in enumerate(keys) if a < b]
            for j in supers:
                b = keys[j]
                if not any(keys[k] < b and a < keys[k] for k in supers if k != j):
                    self.edges[i].append(j)
        self._by_labels = {v.labels: i for i, v in enumerate(self.vertices)}
        self._graph = g

    def properties(self, node: int) -> dict:
        return self._graph.nodes[node].properties

    def vertices_with_superset(self, wanted: frozenset) -> list[int]:
        wanted = frozenset(wanted)
        if not wanted:
            return list(range(len(self.vertices)))
        starts = [i for i, v in enumerate(self.vertices) if wanted <= v.labels
                  and not any(self.vertices[k].labels >= wanted and i in self.edges[k]
                              for k in range(len(self.vertices)))]
        seen: set[int] = set()
        stack = list(starts)
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            stack.extend(self.edges[i])
        return sorted(seen)


class EdgeTypesMap:
    """(src, dst) -> type -> list of edge ids, in ascending edge id.

    Backed by the edge ids sorted on (src, dst, type, id) and looked up by
    binary search, which keeps construction a single numpy sort.
    """

    def __init__(self, g: Multigraph):
        self._types = g.type_alphabet
        self._n = g.n_nodes
        self._p = max(len(self._types), 1)
        ids = np.arange(g.n_edges, dtype=np.int64)
        self._order = np.lexsort((ids, g.etype_idx, g.dst, g.src))
        self._keys = (g.src[self._order] * self._n + g.dst[self._order]) * self._p + g.etype_idx[self._order]

    def _slice(self, lo_key: int, hi_key: int) -> np.ndarray:
        lo = np.searchsorted(self._keys, lo_key, side="left")
        hi = np.searchsorted(self._keys, hi_key, side="left")
        return self._order[lo:hi]

    def get(self, src: int, dst: int, etype: str | None = None) -> list[int]:
        base = (src * self._n + dst) * self._p
        if etype is not None:
            if etype not in self._types:
                return []
            k = base + self._types.index(etype)
            return self._slice(k, k + 1).tolist()
        return sorted(self._slice(base, base + self._p).tolist())

    def pairs(self):
        pair_keys = np.unique(self._keys // self._p)
        return [(int(k // self._n), int(k % self._n)) for k in pair_keys]

    def items(self):
        for src, dst in self.pairs():
            inner: dict[str, list[int]] = {}
            base = (src * self._n + dst) * self._p
            for t, name in enumerate(self._types):
                ids = self._slice(base + t, base + t + 1)
                if len(ids):
                    inner[name] = ids.tolist()
            yield (src, dst), inner

    def __len__(self) -> int:
        return int(len(np.unique(self._keys // self._p)))


class TargetIndex:
    """All target-side structures built once per graph."""

    def __init__(self, g: Multigraph, *, _rows=None):
        self.graph = g
        self.h = len(g.label_alphabet)
        self.p = len(g.type_alphabet)
        self.width, self.n_words = kernels.signature_width(self.h, self.p)
        self.label_first_words, self.label_second_words = self._label_words()
        self.node_label_graph = NodeLabelGraph(g)
        self.edge_types_map = EdgeTypesMap(g)
        self.edge_properties = [e.properties for e in g.edges]
        if _rows is None:
            _rows = kernels.build_pair_rows(
                g.src, g.dst, g.etype_idx, self.label_first_words, self.label_second_words,
                g.n_nodes, self.h, self.p,
            )
        self.row_first, self.row_second, self.bits = _rows
        self.type_degree = self._type_degrees()
        self.out_dst_sorted = g.dst[g.out_eid]
        self.type_frequency = np.bincount(g.etype_idx, minlength=self.p)
        self._row_of = None

    def _label_words(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.graph
        first = np.zeros((g.n_nodes, self.n_words), dtype=np.uint64)
        second = np.zeros((g.n_nodes, self.n_words), dtype=np.uint64)
        second_base = self.h + 2 * self.p
        pairs = [(nd.id, g.label_index[lab]) for nd in g.nodes for lab in nd.labels]
        if not pairs:
            return first, second
        u, k = np.asarray(pairs, dtype=np.int64).T
        one = np.uint64(1)
        np.bitwise_or.at(first, (u, k >> 6), one << (k & 63).astype(np.uint64))
        k2 = k + second_base
        np.bitwise_or.at(second, (u, k2 >> 6), one << (k2 & 63).astype(np.uint64))
        return first, second

    def _type_degrees(self) -> np.ndarray:
        g = self.graph
        deg = np.zeros((g.n_nodes, max(self.p, 1), 2), dtype=np.int32)
        np.add.at(deg, (g.src, g.etype_idx, 0), 1)
        np.add.at(deg, (g.dst, g.etype_idx, 1), 1)
        return deg

    @property
    def n_rows(self) -> int:
        return len(self.row_first)

    def row(self, a: int, b: int) -> np.ndarray | None:
        """Signature of the target pair ``(a, b)`` with ``a <= b``; None if unconnected."""
        if self._row_of is None:
            self._row_of = {
                (int(x), int(y)): r for r, (x, y) in enumerate(zip(self.row_first, self.row_second))
            }
        r = self._row_of.get((a, b))
        return None if r is None else self.bits[r]

    def t_degree(self, u: int, etype: str, direction: str) -> int:
        k = self.graph.type_index.get(etype)
        if k is None:
            return 0
        return int(self.type_degree[u, k, 0 if direction == "out" else 1])

    def nodes_with_label_superset(self, wanted) -> Iterator[int]:
        for i in self.node_label_graph.vertices_with_superset(frozenset(wanted)):
            yield from self.node_label_graph.vertices[i].nodes.tolist()

    def label_mask(self, wanted) -> np.ndarray:
        mask = np.zeros(self.graph.n_nodes, dtype=bool)
        for i in self.node_label_graph.vertices_with_superset(frozenset(wanted)):
            mask[self.node_label_graph.vertices[i].nodes] = True
        return mask

    # -- snapshot -----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        g = self.graph
        meta = {
            "version": SNAPSHOT_VERSION,
            "label_alphabet": g.label_alphabet,
            "type_alphabet": g.type_alphabet,
            "nodes": [[sorted(nd.labels), nd.properties] for nd in g.nodes],
            "edges": [[e.src, e.dst, e.etype, e.properties] for e in g.edges],
        }
        payload = io.BytesIO()
        np.savez(
            payload,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
            row_first=self.row_first,
            row_second=self.row_second,
            bits=self.bits,
        )
        with open(path, "wb") as fh:
            fh.write(SNAPSHOT_MAGIC)
            fh.write(SNAPSHOT_VERSION.to_bytes(1, "little"))
            fh.write(payload.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "TargetIndex":
        with open(path, "rb") as fh:
            head = fh.read(len(SNAPSHOT_MAGIC) + 1)
            if head[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
                raise SnapshotError(f"{path}: not an index snapshot")
            if head[-1] != SNAPSHOT_VERSION:
                raise SnapshotError(f"{path}: unsupported snapshot version {head[-1]}")
            data = np.load(io.BytesIO(fh.read()))
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        nodes = [Node(i, frozenset(labels), props) for i, (labels, props) in enumerate(meta["nodes"])]
        edges = [Edge(i, s, d, t, props) for i, (s, d, t, props) in enumerate(meta["edges"])]
        g = Multigraph(nodes, edges)
        if g.label_alphabet != meta["label_alphabet"] or g.type_alphabet != meta["type_alphabet"]:
            raise SnapshotError(f"{path}: alphabets do not match the stored graph")
        rows = (data["row_first"], data["row_second"], data["bits"])
        return cls(g, _rows=rows)


def build_target_index(g: Multigraph) -> TargetIndex:
    return TargetIndex(g)
