"""Query pipeline: parse, split on OR, then per branch symmetry, domains,
ordering and matching; finally the union of the branches and RETURN."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cypher.compile import CompiledQuery, compile_query, referenced_entities
from .cypher.dnf import split_on_or
from .cypher.parser import parse
from .cypher.returns import ResultTable, evaluate_return
from .domains import Domains, compute_domains, edge_filter_mask, node_filter_mask
from .index import TargetIndex
from .matcher import MatchPlan, MatchTimeout, kernel_count, kernel_occurrences, match_all, prepare
from .ordering import ablation_ordering
from .symmetry import BreakingConditions, derive_conditions, enumerate_automorphisms

REPORT_SCHEMA_VERSION = 1
PHASES = ("read", "index", "breaking_conditions", "domains", "ordering", "matching")


@dataclass
class EngineOptions:
    ordering: str = "full"
    seed: int = 0
    symmetry: bool = True
    bitmatrix: bool = True
    paper_strict_domains: bool = False
    limit: int | None = None
    timeout: float | None = None
    distinct_occurrences: bool = False  # dedup OR branches by edge image instead of mapping
    driver: str = "auto"  # "auto", "python" or "kernel"
    max_query_nodes: int = 12


@dataclass
class RunReport:
    status: str = "completed"
    count: int = 0
    rows: ResultTable | None = None
    phases: dict = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    total: float = 0.0
    branches: int = 1
    automorphisms: list = field(default_factory=list)  # |Aut| per branch

    def to_json(self) -> dict:
        out = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "status": self.status,
            "count": self.count,
            "phases": {k: round(v, 6) for k, v in self.phases.items()},
            "total_seconds": round(self.total, 6),
            "branches": self.branches,
        }
        if self.rows is not None:
            out["columns"] = self.rows.headers
            out["rows"] = self.rows.rows
        return out


@dataclass
class Branch:
    compiled: CompiledQuery
    conds: BreakingConditions
    n_aut: int
    domains: Domains | None = None
    plan: MatchPlan | None = None


def _fixed_entities(compiled: CompiledQuery) -> tuple[set, set]:
    nodes, edges = set(), set()
    for name in compiled.referenced:
        kind, i = compiled.entity(name)
        (nodes if kind == "node" else edges).add(i)
    return nodes, edges


def plan_branch(compiled: CompiledQuery, idx: TargetIndex, opts: EngineOptions, phases: dict) -> Branch:
    """Symmetry, domains and ordering for one conjunctive query."""
    q = compiled.graph
    t0 = time.perf_counter()
    if opts.symmetry:
        fixed_n, fixed_e = _fixed_entities(compiled)
        auts = enumerate_automorphisms(q, fixed_n, fixed_e, opts.max_query_nodes)
        conds = derive_conditions(auts)
        n_aut = len(auts)
    else:
        conds, n_aut = BreakingConditions(), 1
    t1 = time.perf_counter()
    phases["breaking_conditions"] += t1 - t0
    branch = Branch(compiled, conds, n_aut)
    if compiled.unsatisfiable:
        return branch

    node_ok = np.stack([
        node_filter_mask(q, u, idx, compiled.node_literals[u]) for u in range(q.n_nodes)
    ]) if q.n_nodes else np.zeros((0, idx.graph.n_nodes), bool)
    if opts.paper_strict_domains:
        masks = None
    else:
        masks = list(node_ok)
    domains = compute_domains(
        q, idx, compiled.node_literals, use_bitmatrix=opts.bitmatrix,
        paper_strict=opts.paper_strict_domains, node_masks=masks,
    )
    t2 = time.perf_counter()
    phases["domains"] += t2 - t1
    if domains is None or domains.empty:
        return branch
    branch.domains = domains

    freq = {t: int(c) for t, c in zip(idx.graph.type_alphabet, idx.type_frequency)}
    order = ablation_ordering(opts.ordering, q, domains, opts.seed, freq)
    edge_ok = np.stack([
        edge_filter_mask(q, e, idx, compiled.edge_literals[e]) for e in range(q.n_edges)
    ])
    entity_of = {name: ("node", i) for name, i in compiled.node_ids.items()}
    entity_of.update({name: ("edge", i) for name, i in compiled.edge_ids.items()})
    branch.plan = prepare(q, idx, domains, order.edges, conds, node_ok, edge_ok,
                          compiled.match_literals, entity_of)
    phases["ordering"] += time.perf_counter() - t2
    return branch


def _stream(plan: MatchPlan, opts: EngineOptions, limit, deadline):
    use_kernel = opts.driver == "kernel" or (opts.driver == "auto" and not plan.has_match_literals)
    if use_kernel:
        return kernel_occurrences(plan, limit, deadline)
    return match_all(plan, limit, deadline)


def run_compiled(branches_src: list, idx: TargetIndex, opts: EngineOptions, report: RunReport,
                 ret, node_ids, edge_ids, count_only: bool = False) -> RunReport:
    phases = report.phases
    # the budget covers planning as well as the search
    deadline = None if opts.timeout is None else time.perf_counter() + opts.timeout
    branches = []
    for c in branches_src:
        if deadline is not None and time.perf_counter() > deadline:
            report.status = "timeout"
            report.branches = len(branches_src)
            return report
        branches.append(plan_branch(c, idx, opts, phases))
    report.branches = len(branches)
    report.automorphisms = [b.n_aut for b in branches]
    limit = opts.limit
    if ret.limit is not None:
        limit = ret.limit if limit is None else min(limit, ret.limit)
    live = [b for b in branches if b.plan is not None]

    t0 = time.perf_counter()
    want_rows = ret.kind == "rows" and not count_only
    seen: set = set()
    collected: list = []
    fast_count = False
    try:
        if not want_rows and len(branches) == 1 and opts.driver != "python" and live \
                and not live[0].plan.has_match_literals and not opts.distinct_occurrences:
            progress = [0]
            fast_count = True
            try:
                report.count = kernel_count(live[0].plan, limit, deadline, progress)
            except MatchTimeout:
                report.count = progress[0]
                raise
        else:
            def union():
                for b in live:
                    remaining = None if limit is None else limit - len(collected)
                    if remaining is not None and remaining <= 0:
                        return
                    # each branch may repeat earlier mappings, so do not cap it at `remaining`
                    branch_limit = remaining if len(live) == 1 else None
                    for occ in _stream(b.plan, opts, branch_limit, deadline):
                        key = occ.edge_image if opts.distinct_occurrences else occ
                        if len(live) > 1 or opts.distinct_occurrences:
                            if key in seen:
                                continue
                            seen.add(key)
                        collected.append(occ)
                        yield occ
                        if limit is not None and len(collected) >= limit:
                            return

            if want_rows:
                report.rows = evaluate_return(ret, union(), node_ids, edge_ids, idx.graph)
                report.count = len(report.rows)
            else:
                report.count = sum(1 for _ in union())
    except MatchTimeout:
        report.status = "timeout"
        if not fast_count:
            report.count = len(collected)
            if want_rows:
                headers = [item.header() for item in ret.items]
                partial = evaluate_return(
                    ret.__class__("rows", ret.items, None), iter(collected), node_ids, edge_ids, idx.graph
                )
                report.rows = ResultTable(headers, partial.rows)
    phases["matching"] += time.perf_counter() - t0
    return report


def compile_branches(ast) -> list[CompiledQuery]:
    """One compiled query per OR branch.  Every branch fixes the entities the
    whole WHERE mentions, so that the branches share one symmetry group and
    their representatives can be merged."""
    mentioned = referenced_entities(ast)
    out = []
    for part in split_on_or(ast):
        c = compile_query(part)
        c.referenced = set(mentioned)
        out.append(c)
    return out


def run_query(idx: TargetIndex, text: str, opts: EngineOptions | None = None,
              count_only: bool = False, read_seconds: float = 0.0, index_seconds: float = 0.0) -> RunReport:
    """Run one query text against an indexed target."""
    opts = opts or EngineOptions()
    t_start = time.perf_counter()
    report = RunReport()
    report.phases["read"] = read_seconds
    report.phases["index"] = index_seconds
    ast = parse(text)
    compiled = compile_branches(ast)
    run_compiled(compiled, idx, opts, report, ast.ret, compiled[0].node_ids, compiled[0].edge_ids,
                 count_only)
    report.total = time.perf_counter() - t_start + read_seconds + index_seconds
    return report


def occurrences(idx: TargetIndex, text: str, opts: EngineOptions | None = None) -> list:
    """All occurrences (after OR union and LIMIT) as a list; handy for tests."""
    opts = opts or EngineOptions()
    ast = parse(text)
    compiled = compile_branches(ast)
    phases = {p: 0.0 for p in PHASES}
    branches = [plan_branch(c, idx, opts, phases) for c in compiled]
    live = [b for b in branches if b.plan is not None]
    seen, out = set(), []
    for b in live:
        for occ in _stream(b.plan, opts, None, None):
            key = occ.edge_image if opts.distinct_occurrences else occ
            if key in seen:
                continue
            seen.add(key)
            out.append(occ)
            if opts.limit is not None and len(out) >= opts.limit:
                return out
    return out
