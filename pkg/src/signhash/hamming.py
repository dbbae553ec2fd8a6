"""Bit-packed binary codes, Hamming distance, and exact linear-scan KNN.

Codes over {-1, +1}^d are packed into 64-bit words, most significant bit
first, so a distance is one XOR plus a popcount per word. The packed
layout also defines the on-disk hex format: bit 0 of the code is the top
bit of the first hex digit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WORD_BITS = 64


def _num_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def pack_signs(x: np.ndarray) -> np.ndarray:
    """Pack rows of sign values into uint64 words (bit 1 where x >= 0).

    Accepts a (d,) vector or an (n, d) matrix; trailing pad bits of the
    last word are zero.
    """
    x = np.asarray(x)
    if np.issubdtype(x.dtype, np.floating) and np.isnan(x).any():
        raise FloatingPointError("cannot binarize NaN values")
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    n, dim = x.shape
    bits = x >= 0
    pad = _num_words(dim) * WORD_BITS - dim
    if pad:
        bits = np.concatenate([bits, np.zeros((n, pad), dtype=bool)], axis=1)
    packed = np.packbits(bits, axis=1)  # uint8, MSB-first per byte
    words = packed.reshape(n, -1).view(">u8").astype(np.uint64)
    return words[0] if squeeze else words


def unpack_signs(words: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`pack_signs`; returns float64 values in {-1, +1}."""
    words = np.asarray(words, dtype=np.uint64)
    squeeze = words.ndim == 1
    if squeeze:
        words = words[None, :]
    as_bytes = words.astype(">u8").view(np.uint8).reshape(words.shape[0], -1)
    bits = np.unpackbits(as_bytes, axis=1)[:, :dim]
    signs = np.where(bits == 1, 1.0, -1.0)
    return signs[0] if squeeze else signs


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing bits between two packed codes."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    if a.shape != b.shape:
        raise ValueError(f"code length mismatch: {a.shape} vs {b.shape}")
    return int(np.bitwise_count(a ^ b).sum())


@dataclass
class CodeMatrix:
    """Packed codes for all nodes: row m is node m's code."""

    bits: np.ndarray  # (num_nodes, num_words) uint64
    dim: int

    @classmethod
    def from_signs(cls, signs: np.ndarray) -> "CodeMatrix":
        signs = np.atleast_2d(np.asarray(signs))
        return cls(bits=pack_signs(signs), dim=signs.shape[1])

    @property
    def num_nodes(self) -> int:
        return self.bits.shape[0]

    def row(self, node: int) -> np.ndarray:
        return self.bits[node]

    def unpack(self) -> np.ndarray:
        return unpack_signs(self.bits, self.dim)


def knn(matrix: CodeMatrix, query: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Exact k nearest rows of ``matrix`` to ``query`` by Hamming distance.

    One linear scan; ties break toward the lower node index. Asking for
    more neighbours than rows returns all rows.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.uint64)
    if query.shape != matrix.bits.shape[1:]:
        raise ValueError("query length does not match the code matrix")
    dists = np.bitwise_count(matrix.bits ^ query[None, :]).sum(axis=1)
    order = np.argsort(dists, kind="stable")[: min(k, matrix.num_nodes)]
    return [(int(n), int(dists[n])) for n in order]


def code_to_hex(row: np.ndarray, dim: int) -> str:
    full = "".join(f"{int(w):016x}" for w in np.asarray(row, dtype=np.uint64))
    return full[: (dim + 3) // 4]


def hex_to_code(text: str, dim: int) -> np.ndarray:
    if len(text) != (dim + 3) // 4:
        raise ValueError(f"hex code {text!r} has wrong length for dim={dim}")
    n_words = _num_words(dim)
    padded = text.ljust(n_words * 16, "0")
    words = np.array(
        [int(padded[i * 16 : (i + 1) * 16], 16) for i in range(n_words)],
        dtype=np.uint64,
    )
    tail = dim % WORD_BITS
    if tail:  # force pad bits of the last word to zero
        mask = np.uint64(((1 << tail) - 1) << (WORD_BITS - tail))
        words[-1] &= mask
    return words


def save_codes(path, matrix: CodeMatrix) -> None:
    """Write ``node<TAB>hex`` lines with a ``# d=`` header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# d={matrix.dim}\n")
        for node in range(matrix.num_nodes):
            fh.write(f"{node}\t{code_to_hex(matrix.bits[node], matrix.dim)}\n")


def load_codes(path) -> CodeMatrix:
    dim = None
    rows: dict[int, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "d=" in line:
                    dim = int(line.split("d=", 1)[1])
                continue
            if dim is None:
                raise ValueError("code file is missing its '# d=' header")
            node_str, hex_str = line.split("\t")
            rows[int(node_str)] = hex_to_code(hex_str, dim)
    if dim is None or not rows:
        raise ValueError("code file contains no codes")
    if sorted(rows) != list(range(len(rows))):
        raise ValueError("code file must cover node indices 0..M-1 exactly")
    bits = np.stack([rows[n] for n in range(len(rows))])
    return CodeMatrix(bits=bits, dim=dim)
