"""Planted-partition generator for desk-scale signed-graph experiments.

Nodes are grouped into blocks; sampled edges are positive inside a block
and negative across blocks, with a configurable fraction of flipped
signs. The block structure gives a known ground truth against which
embeddings can be sanity-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SynthConfig:
    blocks: int = 2
    block_size: int = 30
    edge_prob: float = 0.3
    noise: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.blocks < 2:
            raise ValueError("need at least 2 blocks")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not 0.0 < self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in (0, 1]")
        if not 0.0 <= self.noise < 0.5:
            raise ValueError("noise must be in [0, 0.5)")


def planted_partition(config: SynthConfig) -> tuple[list[tuple[int, int, int]], int, int]:
    """Sample a signed planted-partition graph.

    Every unordered node pair becomes an edge with probability
    ``edge_prob``; the sign follows the block structure and is flipped
    with probability ``noise``. Returns the directed edge list (each pair
    emitted once, low index first) together with the positive/negative
    edge tally.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.blocks * config.block_size
    block = np.arange(n) // config.block_size

    edges: list[tuple[int, int, int]] = []
    num_pos = num_neg = 0
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() >= config.edge_prob:
                continue
            sign = 1 if block[u] == block[v] else -1
            if rng.random() < config.noise:
                sign = -sign
            edges.append((u, v, sign))
            if sign == 1:
                num_pos += 1
            else:
                num_neg += 1
    return edges, num_pos, num_neg
