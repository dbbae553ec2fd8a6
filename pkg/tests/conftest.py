import numpy as np
import pytest

import signhash as sh


@pytest.fixture
def tiny_graph():
    # one positive and one negative edge around node 0
    return sh.build_graph([(0, 1, 1), (0, 2, -1)])


@pytest.fixture(scope="session")
def synth_graph():
    edges, num_pos, num_neg = sh.planted_partition(
        sh.SynthConfig(blocks=2, block_size=30, edge_prob=0.3, noise=0.05, seed=42)
    )
    graph = sh.build_graph(edges)
    assert (graph.num_pos, graph.num_neg) == (num_pos, num_neg)
    return graph


@pytest.fixture(scope="session")
def trained_synth(synth_graph):
    """One converged desk-scale training run, shared across test modules."""
    config = sh.synthetic_train_config(code_dim=32, seed=0)
    params, report = sh.train(synth_graph, config)
    return params, report, config


def random_edge_list(rng: np.random.Generator, max_nodes: int = 30) -> list[str]:
    """Raw edge-list lines with duplicates, self-loops and conflicts mixed in."""
    n = int(rng.integers(2, max_nodes + 1))
    n_lines = int(rng.integers(1, 4 * n))
    lines = []
    for _ in range(n_lines):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        sign = 1 if rng.random() < 0.6 else -1
        lines.append(f"{u} {v} {sign}")
    return lines
