"""RETURN clause evaluation over a stream of occurrences."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import islice
from typing import Iterable

from ..graph import ORIG_ID, UNLABELED, Multigraph
from .ast import ReturnItem, ReturnSpec

EMPTY = None  # cell value for a projected property the entity lacks


@dataclass
class ResultTable:
    headers: list
    rows: list

    def __len__(self) -> int:
        return len(self.rows)


def _labels(g: Multigraph, u: int) -> list:
    return sorted(lab for lab in g.nodes[u].labels if lab != UNLABELED)


def _public_props(props: dict) -> dict:
    return {k: v for k, v in props.items() if k != ORIG_ID}


def _cell(item: ReturnItem, occ, node_ids: dict, edge_ids: dict, g: Multigraph):
    if item.kind == "nodes":
        return [g.orig_node_id(t) for t in occ.node_map]
    if item.kind == "relationships":
        return [g.orig_edge_id(t) for t in occ.edge_map]
    if item.entity in node_ids:
        u = occ.node_map[node_ids[item.entity]]
        nd = g.nodes[u]
        if item.kind == "prop":
            return nd.properties.get(item.key, EMPTY) if item.key != ORIG_ID else g.orig_node_id(u)
        if item.kind == "labels":
            return _labels(g, u)
        return {"id": g.orig_node_id(u), "labels": _labels(g, u),
                "properties": _public_props(nd.properties)}
    e = occ.edge_map[edge_ids[item.entity]]
    ed = g.edges[e]
    if item.kind == "prop":
        return ed.properties.get(item.key, EMPTY) if item.key != ORIG_ID else g.orig_edge_id(e)
    if item.kind == "type":
        return ed.etype
    return {"id": g.orig_edge_id(e), "type": ed.etype, "src": g.orig_node_id(ed.src),
            "dst": g.orig_node_id(ed.dst), "properties": _public_props(ed.properties)}


def evaluate_return(
    spec: ReturnSpec, occurrences: Iterable, node_ids: dict, edge_ids: dict, target: Multigraph
):
    """Count the occurrences, or project one row per occurrence.

    ``node_ids``/``edge_ids`` map query entity names to query ids, as in a
    compiled query.  The stream is consumed lazily and cut at the LIMIT.
    """
    stream = occurrences if spec.limit is None else islice(occurrences, spec.limit)
    if spec.kind == "count":
        return sum(1 for _ in stream)
    headers = [item.header() for item in spec.items]
    rows = [[_cell(item, occ, node_ids, edge_ids, target) for item in spec.items] for occ in stream]
    return ResultTable(headers, rows)
