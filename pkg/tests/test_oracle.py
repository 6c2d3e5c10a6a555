import pytest

import helpers
from mgm.cypher.compile import compile_query
from mgm.cypher.parser import parse
from mgm.oracle import OracleCapError, is_valid_mapping, oracle_match, oracle_query
from mgm.synth import GenConfig, generate_ba


def qgraph(text):
    return compile_query(parse(text)).graph


def parallel(k):
    return helpers.graph([({"n"}, {}), ({"n"}, {})], [(0, 1, "a", {}) for _ in range(k)])


def test_query_bigger_than_target():
    t = parallel(1)
    assert oracle_match(qgraph("MATCH (a)-[]->(b), (b)-[]->(c) RETURN count()"), t).n_mappings == 0


def test_single_edge_parallel():
    res = oracle_match(qgraph("MATCH (a)-[:a]->(b) RETURN count()"), parallel(4))
    assert res.n_mappings == 4 and res.n_classes == 4


def test_two_parallel_into_three():
    res = oracle_match(qgraph("MATCH (a)-[:a]->(b), (a)-[:a]->(b) RETURN count()"), parallel(3))
    assert res.n_mappings == 6 and res.n_classes == 3


def test_undirected_edge_either_way():
    t = helpers.graph([({"n"}, {}), ({"n"}, {})], [(0, 1, "a", {})])
    assert oracle_match(qgraph("MATCH (a)-[:a]-(b) RETURN count()"), t).n_mappings == 2


def test_caps():
    big = generate_ba(GenConfig(40, 60, seed=1))
    with pytest.raises(OracleCapError):
        oracle_match(qgraph("MATCH (a)-[]->(b) RETURN count()"), big)


def test_unknown_filters_both_ways(toy):
    t, _ = toy
    # only t1..t5 carry "name"; nothing has "age", so both tests are unknown
    a = oracle_query(parse("MATCH (a)-[r]->(b) WHERE a.age > 3 RETURN count()"), t)
    b = oracle_query(parse("MATCH (a)-[r]->(b) WHERE NOT (a.age > 3) RETURN count()"), t)
    assert a.n_mappings == 0 and b.n_mappings == 0


def test_mixed_kinds_unknown(toy):
    t, _ = toy
    res = oracle_query(parse('MATCH (a)-[r]->(b) WHERE r.year STARTS WITH "2" RETURN count()'), t)
    assert res.n_mappings == 0
    res = oracle_query(parse('MATCH (a)-[r]->(b) WHERE r.year = "2001" RETURN count()'), t)
    assert res.n_mappings == 0
    res = oracle_query(parse("MATCH (a)-[r]->(b) WHERE r.year = 2001.0 RETURN count()"), t)
    assert res.n_mappings == 1


def test_validity_check(toy):
    t, _ = toy
    q = qgraph(helpers.TOY_QUERY)
    ids = helpers.TOY_EDGE_IDS
    assert is_valid_mapping(q, t, (0, 3, 2, 4), (ids["f"], ids["d"], ids["b"], ids["h"]))
    # x must go q2 -> q1, edge f goes the other way
    assert not is_valid_mapping(q, t, (0, 3, 2, 4), (ids["f"], ids["f"], ids["b"], ids["h"]))
    # not injective on nodes
    assert not is_valid_mapping(q, t, (0, 3, 3, 4), (ids["f"], ids["d"], ids["b"], ids["h"]))


def test_oracle_agrees_with_engine_on_toy(toy):
    t, idx = toy
    for text in (helpers.TOY_QUERY, helpers.NODE_SYMMETRIC_QUERY, helpers.EDGE_SYMMETRIC_QUERY):
        ref = oracle_query(parse(text), t)
        assert sorted(ref.mappings) == sorted(helpers.engine_mappings(idx, text, symmetry=False))
