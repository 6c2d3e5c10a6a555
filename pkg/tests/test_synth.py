from collections import Counter

import numpy as np
import pytest

from mgm.engine import run_query
from mgm.index import build_target_index
from mgm.synth import (ExtractionError, GenConfig, QueryExtractConfig, SynthConfigError, extract_query,
                       generate_ba)


def test_tree_sized_graph():
    g = generate_ba(GenConfig(10, 9, seed=0))
    assert g.n_nodes == 10 and g.n_edges == 9
    assert sum(g.total_degree(u) for u in range(10)) == 18
    # every node after the first attaches at least once, so the graph is connected
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for v in g.neighbors(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    assert len(seen) == 10


def test_exact_sizes_and_determinism():
    a = generate_ba(GenConfig(50, 173, 3, 2, seed=4))
    b = generate_ba(GenConfig(50, 173, 3, 2, seed=4))
    assert a.n_edges == 173
    assert [(e.src, e.dst, e.etype) for e in a.edges] == [(e.src, e.dst, e.etype) for e in b.edges]


def test_uniform_labels_balanced():
    fractions = []
    for seed in range(3):
        g = generate_ba(GenConfig(10_000, 10_000, 2, 1, seed=seed))
        fractions.append(Counter(next(iter(nd.labels)) for nd in g.nodes)["L0"] / g.n_nodes)
    assert 0.45 <= np.mean(fractions) <= 0.55


def test_powerlaw_labels_decreasing():
    g = generate_ba(GenConfig(100_000, 100_000, 10, 1, node_dist="powerlaw", seed=1))
    counts = Counter(next(iter(nd.labels)) for nd in g.nodes)
    freq = [counts[f"L{k}"] for k in range(10)]
    assert freq[0] == max(freq)
    # nonincreasing up to sampling noise
    assert all(freq[k + 1] <= freq[k] * 1.05 for k in range(9))


@pytest.mark.parametrize("cfg", [
    GenConfig(0, 0), GenConfig(5, 2), GenConfig(5, 10, n_node_labels=0),
    GenConfig(5, 10, node_dist="zipf"), GenConfig(5, 10, exponent=0.5),
])
def test_bad_generator_config(cfg):
    with pytest.raises(SynthConfigError):
        generate_ba(cfg)


def test_full_density_triangle():
    g = generate_ba(GenConfig(30, 120, seed=2))
    q = extract_query(g, QueryExtractConfig(3, 1.0, seed=1))
    pairs = {frozenset((e.src, e.dst)) for e in q.edges}
    assert len(pairs) == 3


def test_densify_closes_triangle():
    g = generate_ba(GenConfig(30, 120, seed=2))
    q = extract_query(g, QueryExtractConfig(3, 0.7, seed=3))
    pairs = {frozenset((e.src, e.dst)) for e in q.edges}
    assert len(pairs) == 3  # ceil(0.7 * 3) = 3


def test_extracted_queries_occur():
    g = generate_ba(GenConfig(200, 800, 3, 3, seed=5))
    idx = build_target_index(g)
    for seed in range(15):
        q = extract_query(g, QueryExtractConfig(int(3 + seed % 3), 0.5, seed=seed))
        assert q.is_connected()
        assert run_query(idx, q.to_cypher()).count >= 1


def test_extraction_gives_up():
    g = generate_ba(GenConfig(10, 9, seed=0))
    with pytest.raises(ExtractionError):
        extract_query(g, QueryExtractConfig(4, 1.0, seed=0, max_restarts=5))


def test_bad_extract_config():
    g = generate_ba(GenConfig(10, 9, seed=0))
    with pytest.raises(SynthConfigError):
        extract_query(g, QueryExtractConfig(1, 0.5))
    with pytest.raises(SynthConfigError):
        extract_query(g, QueryExtractConfig(3, 0.0))
