"""Signed edge-list parsing and compact adjacency indexing.

A signed graph is read from plain text, one directed edge per line
(``src dst sign`` with sign 1 or -1), cleaned of duplicates, self-loops
and contradictory pairs, and stored with dense node indices so that
downstream code can use plain arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

POS = 1
NEG = -1

_CONFLICT = 0  # internal marker for a (src, dst) pair seen with both signs


class EdgeListError(ValueError):
    """Malformed or unusable edge-list input."""


@dataclass(frozen=True)
class GraphStats:
    num_nodes: int
    num_pos_links: int
    num_neg_links: int
    pos_fraction: float


@dataclass(eq=False)
class SignedGraph:
    """Cleaned signed directed graph with dense node indices.

    ``pos_out`` / ``neg_out`` hold sorted out-neighbour lists per node;
    ``pos_und`` / ``neg_und`` are their symmetric closures. ``ext_ids``
    maps a dense index back to the id used in the input file and
    ``dense_ids`` is the inverse. Instances are never mutated after
    construction and can be shared freely between threads.
    """

    num_nodes: int
    pos_out: list[list[int]]
    neg_out: list[list[int]]
    pos_und: list[list[int]]
    neg_und: list[list[int]]
    ext_ids: list[int]
    dense_ids: dict[int, int]
    num_pos: int
    num_neg: int

    def stats(self) -> GraphStats:
        total = self.num_pos + self.num_neg
        return GraphStats(
            num_nodes=self.num_nodes,
            num_pos_links=self.num_pos,
            num_neg_links=self.num_neg,
            pos_fraction=self.num_pos / total,
        )

    def neighbors(self, node: int, sign: int, directed: bool = False) -> list[int]:
        """Sorted neighbour list of ``node`` for one sign.

        ``directed=True`` returns out-neighbours only; otherwise the
        symmetric closure is used.
        """
        if not 0 <= node < self.num_nodes:
            raise IndexError(f"node {node} out of range [0, {self.num_nodes})")
        if sign == POS:
            table = self.pos_out if directed else self.pos_und
        elif sign == NEG:
            table = self.neg_out if directed else self.neg_und
        else:
            raise ValueError(f"sign must be 1 or -1, got {sign}")
        return table[node]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """All directed edges as (src, dst, sign) dense-index triples."""
        for u in range(self.num_nodes):
            for v in self.pos_out[u]:
                yield u, v, POS
            for v in self.neg_out[u]:
                yield u, v, NEG

    def external_edge_set(self) -> set[tuple[int, int, int]]:
        """Edge set in terms of the original (external) node ids."""
        return {
            (self.ext_ids[u], self.ext_ids[v], s) for u, v, s in self.edges()
        }

    def __eq__(self, other: object) -> bool:
        # Graphs are compared by content, not by the incidental dense
        # numbering, which depends on input order.
        if not isinstance(other, SignedGraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.external_edge_set() == other.external_edge_set()
        )

    def to_edge_lines(self) -> list[str]:
        """Serialize the cleaned graph back to edge-list lines."""
        return [
            f"{self.ext_ids[u]}\t{self.ext_ids[v]}\t{s}" for u, v, s in self.edges()
        ]


def _parse_lines(lines: Iterable[str]) -> Iterator[tuple[int, int, int]]:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise EdgeListError(
                f"line {lineno}: expected 'src dst sign', got {line!r}"
            )
        try:
            src, dst, sign = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise EdgeListError(
                f"line {lineno}: non-integer field in {line!r}"
            ) from None
        if src < 0 or dst < 0:
            raise EdgeListError(f"line {lineno}: negative node id in {line!r}")
        if sign not in (POS, NEG):
            raise EdgeListError(f"line {lineno}: sign must be 1 or -1, got {sign}")
        yield src, dst, sign


def build_graph(edges: Iterable[tuple[int, int, int]]) -> SignedGraph:
    """Clean raw (src, dst, sign) edges and build a :class:`SignedGraph`.

    Cleaning drops self-loops, exact duplicates and pairs reported with
    both signs (keeping a contradictory label would inject noise into the
    supervision derived from the graph). Nodes left without any edge are
    removed and the survivors are numbered densely in first-seen order.
    """
    pair_sign: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []
    n_self = n_dup = 0

    for src, dst, sign in edges:
        if src == dst:
            n_self += 1
            continue
        key = (src, dst)
        prev = pair_sign.get(key)
        if prev is None:
            pair_sign[key] = sign
            order.append(key)
        elif prev == sign:
            n_dup += 1
        elif prev != _CONFLICT:
            pair_sign[key] = _CONFLICT

    n_conflict = sum(1 for s in pair_sign.values() if s == _CONFLICT)
    if n_self or n_dup or n_conflict:
        log.warning(
            "edge cleaning dropped %d self-loops, %d duplicates, "
            "%d conflicting-sign pairs",
            n_self,
            n_dup,
            n_conflict,
        )

    dense_ids: dict[int, int] = {}
    ext_ids: list[int] = []
    kept: list[tuple[int, int, int]] = []
    for src, dst in order:
        sign = pair_sign[(src, dst)]
        if sign == _CONFLICT:
            continue
        for node in (src, dst):
            if node not in dense_ids:
                dense_ids[node] = len(ext_ids)
                ext_ids.append(node)
        kept.append((dense_ids[src], dense_ids[dst], sign))

    if not kept:
        raise EdgeListError("no edges left after cleaning")

    m = len(ext_ids)
    pos_out: list[set[int]] = [set() for _ in range(m)]
    neg_out: list[set[int]] = [set() for _ in range(m)]
    pos_und: list[set[int]] = [set() for _ in range(m)]
    neg_und: list[set[int]] = [set() for _ in range(m)]
    num_pos = num_neg = 0
    for u, v, sign in kept:
        if sign == POS:
            pos_out[u].add(v)
            pos_und[u].add(v)
            pos_und[v].add(u)
            num_pos += 1
        else:
            neg_out[u].add(v)
            neg_und[u].add(v)
            neg_und[v].add(u)
            num_neg += 1

    return SignedGraph(
        num_nodes=m,
        pos_out=[sorted(s) for s in pos_out],
        neg_out=[sorted(s) for s in neg_out],
        pos_und=[sorted(s) for s in pos_und],
        neg_und=[sorted(s) for s in neg_und],
        ext_ids=ext_ids,
        dense_ids=dense_ids,
        num_pos=num_pos,
        num_neg=num_neg,
    )


def parse_edge_list(source) -> SignedGraph:
    """Parse an edge list from a string, an open file, or a line iterable.

    Lines starting with ``#`` and blank lines are skipped. Fields may be
    separated by spaces or tabs.
    """
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source
    return build_graph(_parse_lines(lines))


def load_graph(path) -> SignedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh)


def write_edge_list(path, edges: Iterable[tuple[int, int, int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, s in edges:
            fh.write(f"{u}\t{v}\t{s}\n")
