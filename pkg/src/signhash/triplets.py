"""Triplet supervision extracted from a signed graph.

Each triplet (i, j, k) states that the positively linked pair (i, j)
should end up more similar than the negatively linked pair (i, k).
Anchors without any negative neighbour are paired with a shared virtual
partner instead, encoded by the ``VIRTUAL`` sentinel, so that every
positive edge still contributes a constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .graph import SignedGraph

VIRTUAL = -1


class Triplet(NamedTuple):
    i: int
    j: int
    k: int


@dataclass
class TripletCorpus:
    t_real: list[Triplet] = field(default_factory=list)
    t_virtual: list[Triplet] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.t_real) + len(self.t_virtual)

    def __len__(self) -> int:
        return self.size

    def combined(self) -> list[Triplet]:
        return self.t_real + self.t_virtual


def build_triplets(
    graph: SignedGraph,
    directed: bool = False,
    two_hop_virtual: bool = False,
) -> TripletCorpus:
    """Enumerate all supervision triplets of a graph.

    For every node ``i`` and positive neighbour ``j``: if ``i`` has
    negative neighbours, one real triplet (i, j, k) is emitted per
    negative neighbour ``k``; otherwise (i, j, VIRTUAL) is emitted. By
    default neighbourhoods are the undirected closures; ``directed=True``
    restricts them to out-edges.

    ``two_hop_virtual`` tightens the virtual-partner trigger: an anchor
    without negative neighbours is only given virtual triplets when none
    of its neighbours has a negative neighbour either (no negative edge
    reachable within two hops). Anchors failing the check produce no
    triplets at all.

    Output order is ascending in (i, j, k).
    """
    if graph.num_pos == 0:
        raise ValueError("graph has no positive edges, nothing to supervise")

    pos = graph.pos_out if directed else graph.pos_und
    neg = graph.neg_out if directed else graph.neg_und

    corpus = TripletCorpus()
    for i in range(graph.num_nodes):
        js = pos[i]
        if not js:
            continue
        ks = neg[i]
        if ks:
            for j in js:
                for k in ks:
                    if k != j:
                        corpus.t_real.append(Triplet(i, j, k))
        else:
            if two_hop_virtual and any(neg[j] for j in js):
                continue
            for j in js:
                corpus.t_virtual.append(Triplet(i, j, VIRTUAL))
    return corpus


def batches(
    corpus: TripletCorpus,
    batch_size: int,
    seed,
) -> Iterator[list[Triplet]]:
    """Yield one epoch of shuffled mini-batches.

    ``seed`` may be an int or a ``numpy.random.Generator``; passing the
    same generator across calls advances a single reproducible stream.
    """
    if corpus.size == 0:
        raise ValueError("empty triplet corpus")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    combined = corpus.combined()
    perm = rng.permutation(len(combined))
    for start in range(0, len(combined), batch_size):
        yield [combined[p] for p in perm[start : start + batch_size]]


def dump_triplets(path, corpus: TripletCorpus) -> None:
    """Write one ``i j k`` line per triplet; k = -1 encodes VIRTUAL."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus.combined():
            fh.write(f"{t.i} {t.j} {t.k}\n")


def load_triplets(source: Iterable[str] | str) -> TripletCorpus:
    if isinstance(source, str):
        source = source.splitlines()
    corpus = TripletCorpus()
    for line in source:
        line = line.strip()
        if not line:
            continue
        i, j, k = (int(p) for p in line.split())
        (corpus.t_virtual if k == VIRTUAL else corpus.t_real).append(Triplet(i, j, k))
    return corpus
