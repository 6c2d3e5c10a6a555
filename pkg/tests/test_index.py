import numpy as np
import pytest

from helpers import graph, toy_target
from mgm.index import (EdgeTypesMap, SnapshotError, build_target_index, pack_bits, signature_contains,
                       swap_signature, unpack_bits)
from mgm.synth import GenConfig, generate_ba


def bits_of(idx, a, b):
    return unpack_bits(idx.row(a, b), idx.width).astype(int).tolist()


def test_single_edge_row():
    idx = build_target_index(graph([({"x"}, {}), ({"x"}, {})], [(0, 1, "a", {})]))
    assert idx.n_rows == 1
    # L_first, T_in, T_out, L_second
    assert bits_of(idx, 0, 1) == [1, 0, 1, 1]


def test_self_loop_row():
    idx = build_target_index(graph([({"x"}, {})], [(0, 0, "a", {})]))
    assert idx.n_rows == 1
    assert (idx.row_first[0], idx.row_second[0]) == (0, 0)
    assert bits_of(idx, 0, 0) == [1, 1, 1, 1]


def test_toy_rows_one_per_connected_pair():
    t = toy_target()
    idx = build_target_index(t)
    pairs = {tuple(sorted((e.src, e.dst))) for e in t.edges}
    assert set(zip(idx.row_first.tolist(), idx.row_second.tolist())) == pairs
    assert idx.n_rows == len(pairs)


@pytest.mark.parametrize("container,contained,expected", [
    ([1, 0, 1, 0], [0, 0, 1, 0], True),
    ([1, 0, 1, 0], [0, 1, 1, 0], False),
    ([1, 1, 0, 1], [1, 1, 0, 1], True),
    ([1, 1, 1, 1], [0, 1, 0, 1], True),
])
def test_signature_contains(container, contained, expected):
    a = pack_bits(np.array(container, bool), 1)
    b = pack_bits(np.array(contained, bool), 1)
    assert signature_contains(a, b) is expected


def test_signature_width_mismatch():
    with pytest.raises(ValueError):
        signature_contains(np.zeros(1, np.uint64), np.zeros(2, np.uint64))


def test_swap_is_reverse_pair():
    idx = build_target_index(toy_target())
    # t1 -> t4 red, t4 -> t1 blue twice
    row = idx.row(0, 3)
    back = swap_signature(row, idx.h, idx.p)
    assert np.array_equal(swap_signature(back, idx.h, idx.p), row)
    ub = unpack_bits(back, idx.width)
    ur = unpack_bits(row, idx.width)
    h, p = idx.h, idx.p
    assert np.array_equal(ub[h:h + p], ur[h + p:h + 2 * p])


def test_label_superset():
    t = toy_target()
    idx = build_target_index(t)
    assert sorted(idx.nodes_with_label_superset(set())) == list(range(5))
    assert sorted(idx.nodes_with_label_superset({"green", "yellow"})) == [0, 2, 3]
    assert sorted(idx.nodes_with_label_superset({"red"})) == [4]
    assert list(idx.nodes_with_label_superset({"purple"})) == []


def test_label_superset_matches_scan():
    g = generate_ba(GenConfig(40, 80, 3, 2, seed=4))
    # give some nodes a second label
    from mgm.graph import Multigraph, Node
    nodes = [Node(nd.id, nd.labels | ({"L1"} if nd.id % 3 == 0 else set()), {}) for nd in g.nodes]
    g = Multigraph(nodes, g.edges)
    idx = build_target_index(g)
    for wanted in ({"L0"}, {"L1"}, {"L0", "L1"}, {"L2", "L1"}):
        assert sorted(idx.nodes_with_label_superset(wanted)) == \
            [nd.id for nd in g.nodes if wanted <= nd.labels]
        assert np.array_equal(idx.label_mask(wanted), [wanted <= nd.labels for nd in g.nodes])


def test_type_degree_table():
    g = generate_ba(GenConfig(30, 70, 2, 3, seed=9))
    idx = build_target_index(g)
    for u in range(g.n_nodes):
        for t in g.type_alphabet:
            for d in ("in", "out"):
                assert idx.t_degree(u, t, d) == g.t_degree(u, t, d)


def test_edge_types_map():
    t = toy_target()
    m = EdgeTypesMap(t)
    assert m.get(3, 0) == [3, 4]
    assert m.get(3, 0, "blue") == [3, 4]
    assert m.get(3, 0, "red") == []
    assert m.get(0, 3, "red") == [5]
    assert m.get(2, 2) == []
    assert len(m) == 7


def test_snapshot_round_trip(tmp_path):
    g = generate_ba(GenConfig(30, 60, 2, 2, seed=3))
    idx = build_target_index(g)
    path = tmp_path / "t.idx"
    idx.save(path)
    back = type(idx).load(path)
    assert np.array_equal(back.bits, idx.bits)
    assert np.array_equal(back.row_first, idx.row_first)
    assert back.graph.n_edges == g.n_edges


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(b"not a snapshot at all")
    with pytest.raises(SnapshotError):
        type(build_target_index(toy_target())).load(path)
