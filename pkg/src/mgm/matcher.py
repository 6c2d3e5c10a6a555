"""Backtracking search for query occurrences.

Two drivers share one candidate generator (:func:`kernels.fill_candidates`):

* :func:`match_all` walks the search tree in Python with explicit
  candidate lists and cursors per depth, and evaluates WHERE atoms that
  relate two entities while generating candidates;
* :func:`kernel_occurrences` / :func:`kernel_count` hand whole subtrees to
  the compiled :func:`kernels.search_subtrees`, in resumable slices so
  that the time budget can be checked between slices.

Both visit candidates in the same order and so emit the same sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import kernels
from .cypher.evaluate import element_value, literal_truth
from .domains import Domains
from .index import TargetIndex
from .query import QueryGraph
from .symmetry import BreakingConditions


class MatchTimeout(Exception):
    """Raised by the drivers once the deadline has passed."""


@dataclass(frozen=True)
class Occurrence:
    node_map: tuple  # query node id -> target node id
    edge_map: tuple  # query edge id -> target edge id

    @property
    def edge_image(self) -> frozenset:
        return frozenset(self.edge_map)


@dataclass
class MatchState:
    f: np.ndarray
    g: np.ndarray
    cand: list
    cand_index: list
    bound_by: list  # per depth: query nodes first bound there


@dataclass
class MatchPlan:
    q: QueryGraph
    index: TargetIndex
    domains: Domains
    order: np.ndarray
    node_ok: np.ndarray  # (query nodes, target nodes) candidate-time node filter
    edge_ok: np.ndarray  # (query edges, target edges)
    node_conds: np.ndarray
    edge_conds: np.ndarray
    qe_src: np.ndarray
    qe_dst: np.ndarray
    qe_undirected: np.ndarray
    qe_pair: np.ndarray
    qe_flip: np.ndarray
    capacity: np.ndarray  # candidate buffer rows per depth
    depth_start: np.ndarray
    literals_at_depth: list = field(default_factory=list)
    entity_of: dict = field(default_factory=dict)  # name -> ("node"|"edge", id)

    @property
    def has_match_literals(self) -> bool:
        return any(self.literals_at_depth)


def _cond_array(conds) -> np.ndarray:
    if not conds:
        return np.zeros((0, 2), dtype=np.int64)
    return np.asarray(conds, dtype=np.int64).reshape(-1, 2)


def _capacities(q: QueryGraph, order, idx: TargetIndex) -> np.ndarray:
    g = idx.graph
    m = g.n_edges
    if m:
        lo = np.minimum(g.src, g.dst)
        hi = np.maximum(g.src, g.dst)
        _, mult = np.unique(lo * g.n_nodes + hi, return_counts=True)
        max_mult = int(mult.max())
        deg = np.diff(g.out_ptr) + np.diff(g.in_ptr)
        max_deg = int(deg.max())
    else:
        max_mult = max_deg = 0
    caps = []
    bound: set[int] = set()
    for e in order:
        qe = q.edges[int(e)]
        ends = {qe.src, qe.dst}
        n_bound = len(ends & bound)
        if n_bound == 0:
            caps.append(4 * m)
        elif n_bound == len(ends):
            caps.append(max_mult)
        else:
            caps.append(max_deg)
        bound |= ends
    return np.asarray(caps, dtype=np.int64) + 1


def prepare(
    q: QueryGraph,
    idx: TargetIndex,
    domains: Domains,
    order,
    conds: BreakingConditions,
    node_ok: np.ndarray,
    edge_ok: np.ndarray,
    match_literals=(),
    entity_of: dict | None = None,
) -> MatchPlan:
    """Pack everything the search needs into flat arrays."""
    order = np.asarray(list(order), dtype=np.int64)
    k = len(order)
    qe_src = np.asarray([e.src for e in q.edges], dtype=np.int64)
    qe_dst = np.asarray([e.dst for e in q.edges], dtype=np.int64)
    qe_und = np.asarray([not e.directed for e in q.edges], dtype=np.bool_)
    qe_pair = np.asarray(
        [domains.pair_index[(min(e.src, e.dst), max(e.src, e.dst))] for e in q.edges], dtype=np.int64
    )
    qe_flip = qe_src > qe_dst
    caps = _capacities(q, order, idx)
    depth_start = np.zeros(k + 1, dtype=np.int64)
    for d in range(1, k):
        depth_start[d + 1] = depth_start[d] + caps[d]

    entity_of = dict(entity_of or {})
    # each two-entity literal is checked at the first depth binding all its entities
    lits_at = [[] for _ in range(k)]
    bound_at: dict[tuple, int] = {}
    for d, e in enumerate(order.tolist()):
        for key in (("edge", e), ("node", q.edges[e].src), ("node", q.edges[e].dst)):
            bound_at.setdefault(key, d)
    for lit in match_literals:
        depth = max(bound_at[entity_of[name]] for name in lit.atom.entities())
        lits_at[depth].append(lit)

    return MatchPlan(
        q, idx, domains, order,
        np.ascontiguousarray(node_ok, dtype=np.bool_), np.ascontiguousarray(edge_ok, dtype=np.bool_),
        _cond_array(conds.node_conds), _cond_array(conds.edge_conds),
        qe_src, qe_dst, qe_und, qe_pair, qe_flip, caps, depth_start, lits_at, entity_of,
    )


def check_node_break_cond(conds: BreakingConditions, q_node: int, t_node: int, f: dict) -> bool:
    """Both directions: q' < q_node needs f(q') < t_node, q_node < q'' needs t_node < f(q'')."""
    for a, b in conds.node_conds:
        if a == q_node and b in f and not t_node < f[b]:
            return False
        if b == q_node and a in f and not f[a] < t_node:
            return False
    return True


def check_edge_break_cond(conds: BreakingConditions, q_edge: int, t_edge: int, g: dict) -> bool:
    for a, b in conds.edge_conds:
        if a == q_edge and b in g and not t_edge < g[b]:
            return False
        if b == q_edge and a in g and not g[a] < t_edge:
            return False
    return True


def _fill(plan: MatchPlan, e: int, f, g, used_t, buf, pos) -> int:
    d = plan.domains
    ix = plan.index
    gr = ix.graph
    return kernels.fill_candidates(
        e, plan.qe_src, plan.qe_dst, plan.qe_undirected, plan.qe_pair, plan.qe_flip,
        d.offsets, d.a, d.b, d.a2, d.b2, gr.out_ptr, ix.out_dst_sorted, gr.out_eid,
        plan.node_ok, plan.edge_ok, plan.node_conds, plan.edge_conds, f, g, used_t, buf, pos,
    )


def _literal_ok(plan: MatchPlan, lits, f, g) -> bool:
    target = plan.index.graph

    def resolve(acc):
        kind, i = plan.entity_of[acc.entity]
        if kind == "node":
            return element_value(acc, True, target, int(f[i]))
        return element_value(acc, False, target, int(g[i]))

    return all(literal_truth(lit, resolve) for lit in lits)


def find_candidates(plan: MatchPlan, depth: int, f, g, used_t) -> list:
    """Candidate ``(target edge, image of src, image of dst)`` triples for
    the query edge at ``depth`` of the ordering."""
    e = int(plan.order[depth])
    buf = np.empty((int(plan.capacity[depth]), 3), dtype=np.int64)
    n = _fill(plan, e, f, g, used_t, buf, 0)
    cands = [tuple(row) for row in buf[:n].tolist()]
    lits = plan.literals_at_depth[depth] if plan.literals_at_depth else []
    if not lits:
        return cands
    u, v = plan.qe_src[e], plan.qe_dst[e]
    kept = []
    for te, tu, tv in cands:
        fu, fv = f[u], f[v]
        f[u], f[v], g[e] = tu, tv, te
        ok = _literal_ok(plan, lits, f, g)
        f[u], f[v], g[e] = fu, fv, -1
        if ok:
            kept.append((te, tu, tv))
    return kept


def match_all(plan: MatchPlan, limit: int | None = None, deadline: float | None = None) -> Iterator[Occurrence]:
    """Depth-first enumeration with explicit per-depth candidate lists.

    Yields at most ``limit`` occurrences; raises :class:`MatchTimeout` when
    ``deadline`` (a ``time.perf_counter`` value) passes.
    """
    q = plan.q
    k = len(plan.order)
    n_t = plan.index.graph.n_nodes
    state = MatchState(
        np.full(q.n_nodes, -1, dtype=np.int64), np.full(q.n_edges, -1, dtype=np.int64),
        [None] * k, [0] * k, [()] * k,
    )
    f, g = state.f, state.g
    used_t = np.zeros(n_t, dtype=np.bool_)
    used_e: set[int] = set()
    if limit is not None and limit <= 0:
        return
    emitted = 0
    steps = 0

    def restore(depth: int) -> None:
        e = int(plan.order[depth])
        used_e.discard(int(g[e]))
        g[e] = -1
        for u in state.bound_by[depth]:
            used_t[f[u]] = False
            f[u] = -1
        state.bound_by[depth] = ()

    depth = 0
    state.cand[0] = find_candidates(plan, 0, f, g, used_t)
    state.cand_index[0] = 0
    while depth >= 0:
        steps += 1
        if deadline is not None and steps % 256 == 0 and time.perf_counter() > deadline:
            raise MatchTimeout()
        cands = state.cand[depth]
        c = state.cand_index[depth]
        if c >= len(cands):
            depth -= 1
            if depth >= 0:
                restore(depth)
                state.cand_index[depth] += 1
            continue
        te, tu, tv = cands[c]
        if te in used_e:
            state.cand_index[depth] += 1
            continue
        e = int(plan.order[depth])
        u, v = int(plan.qe_src[e]), int(plan.qe_dst[e])
        fresh = []
        if f[u] < 0:
            f[u] = tu
            used_t[tu] = True
            fresh.append(u)
        if f[v] < 0:
            f[v] = tv
            used_t[tv] = True
            fresh.append(v)
        state.bound_by[depth] = tuple(fresh)
        g[e] = te
        used_e.add(te)
        if depth == k - 1:
            yield Occurrence(tuple(f.tolist()), tuple(g.tolist()))
            emitted += 1
            restore(depth)
            state.cand_index[depth] += 1
            if limit is not None and emitted >= limit:
                return
        else:
            depth += 1
            state.cand[depth] = find_candidates(plan, depth, f, g, used_t)
            state.cand_index[depth] = 0


# ---------------------------------------------------------------------------
# compiled driver


def _roots(plan: MatchPlan) -> np.ndarray:
    d = plan.domains
    ix = plan.index
    gr = ix.graph
    return kernels.root_candidates(
        int(plan.order[0]), plan.qe_src, plan.qe_dst, plan.qe_undirected, plan.qe_pair, plan.qe_flip,
        d.offsets, d.a, d.b, d.a2, d.b2, gr.out_ptr, ix.out_dst_sorted, gr.out_eid,
        plan.node_ok, plan.edge_ok, plan.node_conds, plan.edge_conds,
        int(plan.capacity[0]), gr.n_nodes,
    )


def _search(plan: MatchPlan, roots, state, limit, budget, out_f, out_g) -> int:
    d = plan.domains
    ix = plan.index
    return kernels.search_subtrees(
        len(roots), roots, plan.order, plan.depth_start, limit, budget, out_f, out_g, *state,
        plan.qe_src, plan.qe_dst, plan.qe_undirected, plan.qe_pair, plan.qe_flip,
        d.offsets, d.a, d.b, d.a2, d.b2, ix.graph.out_ptr, ix.out_dst_sorted, ix.graph.out_eid,
        plan.node_ok, plan.edge_ok, plan.node_conds, plan.edge_conds,
    )


def _batches(plan: MatchPlan, limit, deadline, collect: bool, batch_seconds: float = 0.05):
    """Yield ``(count, out_f, out_g)`` per slice of compiled search.

    Each slice is bounded by a step budget (number of candidates tried),
    doubled or halved to keep slices near ``batch_seconds``, so the time
    budget is checked at that granularity even inside one large subtree.
    """
    if plan.has_match_literals:
        raise ValueError("the compiled driver does not evaluate two-entity WHERE atoms")
    roots = _roots(plan)
    gr = plan.index.graph
    n_q, m_q = plan.q.n_nodes, plan.q.n_edges
    state = kernels.new_search_state(n_q, m_q, gr.n_nodes, gr.n_edges, int(plan.depth_start[-1]))
    ctl = state[0]
    cap = 1024 if collect else 0
    out_f = np.empty((cap, n_q), dtype=np.int64)
    out_g = np.empty((cap, m_q), dtype=np.int64)
    remaining = -1 if limit is None else int(limit)
    budget = 4096
    while remaining != 0 and (ctl[1] != 0 or ctl[0] < len(roots)):
        if deadline is not None and time.perf_counter() > deadline:
            raise MatchTimeout()
        t0 = time.perf_counter()
        count = _search(plan, roots, state, remaining, budget, out_f, out_g)
        elapsed = time.perf_counter() - t0
        yield count, out_f, out_g
        if remaining > 0:
            remaining -= count
        if elapsed < batch_seconds:
            budget = min(budget * 2, 1 << 40)
        elif elapsed > 2 * batch_seconds and budget > 1024:
            budget //= 2


def kernel_occurrences(plan: MatchPlan, limit: int | None = None, deadline: float | None = None) -> Iterator[Occurrence]:
    for count, out_f, out_g in _batches(plan, limit, deadline, collect=True):
        for i in range(count):
            yield Occurrence(tuple(out_f[i].tolist()), tuple(out_g[i].tolist()))


def kernel_count(plan: MatchPlan, limit: int | None = None, deadline: float | None = None,
                 progress: list | None = None) -> int:
    """Number of occurrences, without materialising them.

    ``progress``, if given, receives the running total after each batch so
    that a caller catching :class:`MatchTimeout` can report a partial count.
    """
    total = 0
    for count, _, _ in _batches(plan, limit, deadline, collect=False):
        total += count
        if progress is not None:
            progress[:] = [total]
    return total
