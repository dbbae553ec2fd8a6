import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import signhash as sh
from signhash.graph import EdgeListError

from conftest import random_edge_list


def test_duplicate_edges_collapse():
    g = sh.parse_edge_list("1 2 1\n1 2 1\n2 3 -1\n")
    assert g.num_nodes == 3
    assert (g.num_pos, g.num_neg) == (1, 1)


def test_self_loops_dropped():
    g = sh.parse_edge_list("1 1 1\n1 2 1\n")
    assert g.num_nodes == 2
    assert (g.num_pos, g.num_neg) == (1, 0)


def test_conflicting_signs_drop_the_pair():
    g = sh.parse_edge_list("1 2 1\n1 2 -1\n3 4 1\n")
    assert g.num_nodes == 2  # nodes 1, 2 became isolated and were removed
    assert g.external_edge_set() == {(3, 4, 1)}


def test_reciprocal_edges_are_distinct_pairs():
    g = sh.parse_edge_list("1 2 1\n2 1 -1\n")
    assert (g.num_pos, g.num_neg) == (1, 1)


def test_dense_ids_first_seen_order():
    g = sh.parse_edge_list("7 3 1\n3 9 -1\n")
    assert g.ext_ids == [7, 3, 9]
    assert g.dense_ids == {7: 0, 3: 1, 9: 2}


def test_comments_and_blank_lines_skipped():
    g = sh.parse_edge_list("# header\n\n0 1 1\n")
    assert g.num_nodes == 2


@pytest.mark.parametrize(
    "text",
    ["1 2", "1 2 3 4", "a 2 1", "1 b 1", "1 2 0", "1 2 2", "-1 2 1"],
)
def test_malformed_lines_raise_with_line_number(text):
    with pytest.raises(EdgeListError, match="line 2"):
        sh.parse_edge_list(f"0 1 1\n{text}\n")


def test_empty_after_cleaning_raises():
    with pytest.raises(EdgeListError):
        sh.parse_edge_list("1 1 1\n")
    with pytest.raises(EdgeListError):
        sh.parse_edge_list("# nothing\n")


def test_stats_tiny():
    g = sh.parse_edge_list("1 2 1\n1 2 1\n2 3 -1\n")
    s = g.stats()
    assert (s.num_nodes, s.num_pos_links, s.num_neg_links) == (3, 1, 1)
    assert s.pos_fraction == 0.5


def test_stats_matches_generator_tally(synth_graph):
    s = synth_graph.stats()
    assert s.num_pos_links == synth_graph.num_pos
    assert s.num_neg_links == synth_graph.num_neg
    assert 0 < s.pos_fraction < 1


def test_neighbors_direction_and_symmetry(tiny_graph):
    g = sh.build_graph([(0, 1, 1)])
    assert g.neighbors(0, 1) == [1]
    assert g.neighbors(1, 1) == [0]          # symmetric closure
    assert g.neighbors(1, 1, directed=True) == []
    assert g.neighbors(0, -1) == []


def test_neighbors_bad_node(tiny_graph):
    with pytest.raises(IndexError):
        tiny_graph.neighbors(99, 1)
    with pytest.raises(ValueError):
        tiny_graph.neighbors(0, 0)


def test_reserialize_reparse_identical(synth_graph):
    again = sh.parse_edge_list("\n".join(synth_graph.to_edge_lines()))
    assert again == synth_graph
    assert again.stats() == synth_graph.stats()


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_random_edge_lists_satisfy_invariants(seed):
    rng = np.random.default_rng(seed)
    lines = random_edge_list(rng)
    try:
        g = sh.parse_edge_list("\n".join(lines))
    except EdgeListError:
        return  # everything was cleaned away; nothing to check

    # degree sums match the stored link counts
    assert sum(len(a) for a in g.pos_out) == g.num_pos
    assert sum(len(a) for a in g.neg_out) == g.num_neg

    # id mapping is a bijection
    assert len(g.ext_ids) == g.num_nodes == len(g.dense_ids)
    for dense, ext in enumerate(g.ext_ids):
        assert g.dense_ids[ext] == dense

    seen_pairs = set()
    for u in range(g.num_nodes):
        assert u not in g.pos_out[u] and u not in g.neg_out[u]
        for v in g.pos_out[u]:
            assert (u, v) not in seen_pairs
            seen_pairs.add((u, v))
        for v in g.neg_out[u]:
            assert (u, v) not in seen_pairs
            seen_pairs.add((u, v))

    # every node kept at least one edge
    for u in range(g.num_nodes):
        assert g.pos_und[u] or g.neg_und[u]

    # undirected lists are symmetric closures
    for table_out, table_und in ((g.pos_out, g.pos_und), (g.neg_out, g.neg_und)):
        expected = [set() for _ in range(g.num_nodes)]
        for u in range(g.num_nodes):
            for v in table_out[u]:
                expected[u].add(v)
                expected[v].add(u)
        assert [sorted(s) for s in expected] == table_und

    # round trip
    assert sh.parse_edge_list("\n".join(g.to_edge_lines())) == g


def test_load_graph_roundtrip(tmp_path, synth_graph):
    path = tmp_path / "graph.tsv"
    sh.graph.write_edge_list(
        path,
        [
            (synth_graph.ext_ids[u], synth_graph.ext_ids[v], s)
            for u, v, s in synth_graph.edges()
        ],
    )
    assert sh.load_graph(path) == synth_graph
