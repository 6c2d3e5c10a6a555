import time

import numpy as np
import pytest

import helpers
from mgm.cypher.compile import compile_query
from mgm.cypher.parser import parse
from mgm.engine import PHASES, EngineOptions, plan_branch, run_query
from mgm.index import build_target_index
from mgm.matcher import (MatchTimeout, check_edge_break_cond, check_node_break_cond, find_candidates,
                         kernel_count, kernel_occurrences, match_all)
from mgm.oracle import is_valid_mapping
from mgm.symmetry import BreakingConditions


def plan_for(idx, text, **opts):
    phases = {p: 0.0 for p in PHASES}
    return plan_branch(compile_query(parse(text)), idx, EngineOptions(**opts), phases).plan


def parallel_target(k):
    return helpers.graph([({"n"}, {}), ({"n"}, {})], [(0, 1, "a", {}) for _ in range(k)])


def test_single_edge_parallel_targets():
    idx = build_target_index(parallel_target(4))
    assert run_query(idx, "MATCH (x)-[:a]->(y) RETURN count()").count == 4


def test_parallel_pair_query():
    idx = build_target_index(parallel_target(3))
    text = "MATCH (x)-[:a]->(y), (x)-[:a]->(y) RETURN count()"
    assert run_query(idx, text).count == 3
    assert run_query(idx, text, EngineOptions(symmetry=False)).count == 6


def test_triangle_in_clique():
    idx = build_target_index(helpers.clique_target())
    maps = helpers.engine_mappings(idx, helpers.TRIANGLE_QUERY, symmetry=False)
    assert maps == [((1, 2, 3), (0, 1, 4, 5, 6, 8))]


def test_dead_end_gives_no_candidates(toy):
    _, idx = toy
    plan = plan_for(idx, helpers.TOY_QUERY, symmetry=False)
    # q1 -> t1, q2 -> t2: edge x needs a blue edge t2 -> t1, and there is none
    f = np.array([0, 1, -1, -1], np.int64)
    g = np.full(4, -1, np.int64)
    used = np.zeros(5, bool)
    used[[0, 1]] = True
    depth = int(np.nonzero(plan.order == 1)[0][0])
    assert find_candidates(plan, depth, f, g, used) == []


def test_one_bound_endpoint_uses_domain_row(toy):
    _, idx = toy
    plan = plan_for(idx, helpers.TOY_QUERY, symmetry=False)
    f = np.array([0, -1, -1, -1], np.int64)  # q1 -> t1
    g = np.full(4, -1, np.int64)
    used = np.zeros(5, bool)
    used[0] = True
    depth = int(np.nonzero(plan.order == 0)[0][0])  # edge w between q1 and q2
    cands = find_candidates(plan, depth, f, g, used)
    assert cands == [(helpers.TOY_EDGE_IDS["f"], 0, 3)]


def test_edge_property_filter(toy):
    _, idx = toy
    assert run_query(idx, "MATCH (a)-[r:blue {year: 2004}]->(b) RETURN count()").count == 1
    assert run_query(idx, "MATCH (a)-[r:blue {month: 1}]->(b) RETURN count()").count == 0


def test_node_break_condition():
    conds = BreakingConditions([(1, 2)], [])
    assert check_node_break_cond(conds, 0, 5, {1: 1})
    assert check_node_break_cond(conds, 2, 2, {1: 1})
    assert not check_node_break_cond(conds, 2, 0, {1: 1})
    # checked from the other side as well
    assert not check_node_break_cond(conds, 1, 3, {2: 2})


def test_edge_break_condition():
    d, e = helpers.TOY_EDGE_IDS["d"], helpers.TOY_EDGE_IDS["e"]
    assert check_edge_break_cond(BreakingConditions([], []), 1, 0, {0: 5})
    conds = BreakingConditions([], [(0, 1)])
    assert check_edge_break_cond(conds, 1, e, {0: d})
    assert not check_edge_break_cond(conds, 1, d, {0: e})


def test_drivers_emit_same_sequence(suite):
    for inst in suite[:80]:
        for sym in (False, True):
            plan = plan_for(inst.index, inst.text, symmetry=sym)
            if plan is None:
                continue
            a = list(match_all(plan))
            b = list(kernel_occurrences(plan))
            assert a == b
            assert kernel_count(plan) == len(a)


def test_emitted_mappings_valid(suite):
    for inst in suite[:80]:
        for f, g in helpers.engine_mappings(inst.index, inst.text, symmetry=False):
            assert is_valid_mapping(inst.query, inst.target, f, g)


def test_representatives_are_orbit_minima(suite):
    """With symmetry on, each emitted mapping is the smallest of its class
    under the (node ids, edge ids) tuple order."""
    from mgm.oracle import oracle_match
    for inst in suite[:60]:
        ref = oracle_match(inst.query, inst.target)
        mins = {min(v) for v in ref.classes.values()}
        got = set(helpers.engine_mappings(inst.index, inst.text))
        assert got == mins


def test_limit_stops_early(suite):
    inst = max(suite, key=lambda i: len(helpers.engine_mappings(i.index, i.text, symmetry=False)))
    plan = plan_for(inst.index, inst.text, symmetry=False)
    total = kernel_count(plan)
    for k in (1, 2, total // 2, total, total + 1):
        assert kernel_count(plan, limit=k) == min(k, total)
        assert len(list(match_all(plan, limit=k))) == min(k, total)
        assert len(list(kernel_occurrences(plan, limit=k))) == min(k, total)


def test_small_output_buffer_resumes(suite):
    """More occurrences than the first output buffer holds."""
    from mgm.synth import GenConfig, generate_ba
    g = generate_ba(GenConfig(200, 1200, 1, 1, seed=3))
    idx = build_target_index(g)
    plan = plan_for(idx, "MATCH (a)-[]->(b), (b)-[]->(c) RETURN count()", symmetry=False)
    occ = list(kernel_occurrences(plan))
    assert len(occ) > 1024
    assert occ == list(match_all(plan))


def test_timeout_raises():
    from mgm.synth import GenConfig, generate_ba
    g = generate_ba(GenConfig(2000, 20000, 1, 1, seed=5))
    idx = build_target_index(g)
    plan = plan_for(idx, "MATCH (a)-[]-(b)-[]-(c)-[]-(d)-[]-(e) RETURN count()", symmetry=False)
    kernel_count(plan, limit=10)  # compile outside the timed part
    progress = [0]
    t0 = time.perf_counter()
    with pytest.raises(MatchTimeout):
        kernel_count(plan, deadline=time.perf_counter() + 0.2, progress=progress)
    assert time.perf_counter() - t0 < 1.5
    assert progress[0] > 0
    with pytest.raises(MatchTimeout):
        for _ in match_all(plan, deadline=time.perf_counter() + 0.2):
            pass
