"""The hash network: embedding table, tanh stack, linear code layer.

Each node index is looked up in an embedding table, pushed through a
stack of fully connected tanh layers and a final linear layer of width
``code_dim``; the sign pattern of that output is the node's binary code.
A free vector ``x0`` plays the role of the code of the shared virtual
partner and bypasses the network entirely.

Everything is plain float64 numpy; there is no autodiff, gradients are
derived in :mod:`signhash.objective`.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .hamming import CodeMatrix, pack_signs
from .triplets import VIRTUAL

CHECKPOINT_MAGIC = b"SGNH"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 200
    hidden_dims: tuple[int, ...] = (320, 320, 320)
    code_dim: int = 256
    seed: int = 0

    def validate(self) -> None:
        if self.embed_dim < 1 or self.code_dim < 1:
            raise ValueError("embed_dim and code_dim must be >= 1")
        if len(self.hidden_dims) < 1 or any(w < 1 for w in self.hidden_dims):
            raise ValueError("need at least one hidden layer, all widths >= 1")


@dataclass
class ModelParams:
    """All trainable tensors, in checkpoint declaration order."""

    embed: np.ndarray                 # (num_nodes, embed_dim)
    weights: list[np.ndarray] = field(default_factory=list)  # (d_in, d_out) per hidden layer
    biases: list[np.ndarray] = field(default_factory=list)
    hash_w: np.ndarray = None
    hash_b: np.ndarray = None
    x0: np.ndarray = None             # virtual partner code, optimized directly

    @property
    def num_nodes(self) -> int:
        return self.embed.shape[0]

    def tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        yield "embed", self.embed
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"w{idx}", w
            yield f"b{idx}", b
        yield "hash_w", self.hash_w
        yield "hash_b", self.hash_b
        yield "x0", self.x0

    def copy(self) -> "ModelParams":
        return ModelParams(
            embed=self.embed.copy(),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hash_w=self.hash_w.copy(),
            hash_b=self.hash_b.copy(),
            x0=self.x0.copy(),
        )


def init_params(num_nodes: int, config: ModelConfig) -> ModelParams:
    """Seeded initialization.

    Layer weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases
    zero, embedding rows uniform in [-0.1, 0.1], x0 zero.
    """
    config.validate()
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    rng = np.random.default_rng(config.seed)
    embed = rng.uniform(-0.1, 0.1, size=(num_nodes, config.embed_dim))

    dims = (config.embed_dim, *config.hidden_dims, config.code_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(
        embed=embed,
        weights=weights[:-1],
        biases=biases[:-1],
        hash_w=weights[-1],
        hash_b=biases[-1],
        x0=np.zeros(config.code_dim),
    )


def forward_cached(params: ModelParams, nodes: np.ndarray):
    """Batched forward pass keeping per-layer activations for backprop.

    Returns ``(x, activations)`` where ``x`` is (n, code_dim) and
    ``activations[0]`` is the embedding rows, ``activations[l]`` the
    output of hidden layer l.
    """
    acts = [params.embed[nodes]]
    for w, b in zip(params.weights, params.biases):
        acts.append(np.tanh(acts[-1] @ w + b))
    x = acts[-1] @ params.hash_w + params.hash_b
    return x, acts


def forward_batch(params: ModelParams, nodes) -> np.ndarray:
    nodes = np.asarray(nodes)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= params.num_nodes):
        raise IndexError("node index out of range")
    return forward_cached(params, nodes)[0]


def forward(params: ModelParams, node: int) -> np.ndarray:
    """Relaxed code of one node; the VIRTUAL sentinel maps to x0."""
    if node == VIRTUAL:
        return params.x0.copy()
    if not 0 <= node < params.num_nodes:
        raise IndexError(f"node {node} out of range [0, {params.num_nodes})")
    return forward_cached(params, np.array([node]))[0][0]


def sign_vector(x: np.ndarray) -> np.ndarray:
    """sgn(x) with the tie sgn(0) = +1, as float values in {-1, +1}."""
    x = np.asarray(x)
    if np.isnan(x).any():
        raise FloatingPointError("cannot take the sign of NaN values")
    return np.where(x >= 0, 1.0, -1.0)


def binarize(x: np.ndarray) -> np.ndarray:
    """Packed binary code of a relaxed code vector."""
    return pack_signs(sign_vector(x))


def encode_all(params: ModelParams, batch_size: int = 4096) -> CodeMatrix:
    """Binary codes for every node, row m = binarize(forward(m))."""
    dim = params.hash_b.shape[0]
    rows = []
    for start in range(0, params.num_nodes, batch_size):
        nodes = np.arange(start, min(start + batch_size, params.num_nodes))
        x = forward_batch(params, nodes)
        if not np.isfinite(x).all():
            raise FloatingPointError("non-finite activations while encoding")
        rows.append(pack_signs(sign_vector(x)))
    return CodeMatrix(bits=np.concatenate(rows, axis=0), dim=dim)


def model_config_of(params: ModelParams, seed: int = 0) -> ModelConfig:
    return ModelConfig(
        embed_dim=params.embed.shape[1],
        hidden_dims=tuple(w.shape[1] for w in params.weights),
        code_dim=params.hash_b.shape[0],
        seed=seed,
    )


def save_checkpoint(path, params: ModelParams, config: ModelConfig) -> None:
    """Versioned binary checkpoint.

    Layout: magic, version, length-prefixed JSON header, then every
    tensor as row-major little-endian float64 in declaration order.
    """
    header = json.dumps(
        {
            "num_nodes": params.num_nodes,
            "embed_dim": config.embed_dim,
            "hidden_dims": list(config.hidden_dims),
            "code_dim": config.code_dim,
            "seed": config.seed,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for _, tensor in params.tensors():
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, ModelConfig]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        meta = json.loads(fh.read(header_len).decode("utf-8"))
        config = ModelConfig(
            embed_dim=meta["embed_dim"],
            hidden_dims=tuple(meta["hidden_dims"]),
            code_dim=meta["code_dim"],
            seed=meta["seed"],
        )
        num_nodes = meta["num_nodes"]

        def read_tensor(shape):
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(count * 8), dtype="<f8")
            if data.size != count:
                raise ValueError("checkpoint truncated")
            return data.reshape(shape).astype(np.float64)

        dims = (config.embed_dim, *config.hidden_dims, config.code_dim)
        embed = read_tensor((num_nodes, config.embed_dim))
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            weights.append(read_tensor((fan_in, fan_out)))
            biases.append(read_tensor((fan_out,)))
        x0 = read_tensor((config.code_dim,))
    params = ModelParams(
        embed=embed,
        weights=weights[:-1],
        biases=biases[:-1],
        hash_w=weights[-1],
        hash_b=biases[-1],
        x0=x0,
    )
    return params, config
