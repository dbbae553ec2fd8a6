"""Relaxed triplet ranking loss with quantization penalty, and its exact
gradients.

Similarity between two relaxed codes is measured by half their inner
product; on ±1 codes this is linear in the Hamming distance
(``dist = (d - 2*theta) / 2``), which is what makes the hinge on theta a
margin on Hamming distance. The binarized codes inside the quantization
term are treated as constants, so the sign function never needs a
gradient path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, forward_batch, forward_cached, sign_vector
from .triplets import Triplet, VIRTUAL


@dataclass(frozen=True)
class LossConfig:
    margin: float = 24.0             # required theta gap for real triplets
    virtual_margin: float = 12.0     # same, against the virtual partner
    quant_weight: float = 40.0       # weight of the binarization penalty
    reg_weight: float = 1e-4         # L2 on layer weights and biases
    quant_all_nodes: bool = False    # penalize all nodes each batch, not
                                     # just the ones the batch touches

    def validate(self, code_dim: int) -> None:
        if not 0 <= self.margin <= code_dim:
            raise ValueError(f"margin must be in [0, {code_dim}]")
        if not 0 <= self.virtual_margin <= code_dim:
            raise ValueError(f"virtual_margin must be in [0, {code_dim}]")
        if self.quant_weight < 0 or self.reg_weight < 0:
            raise ValueError("quant_weight and reg_weight must be >= 0")


@dataclass(frozen=True)
class LossBreakdown:
    triplet: float
    virtual: float
    quantization: float
    regularization: float
    total: float

    @classmethod
    def assemble(cls, triplet, virtual, quantization, regularization):
        return cls(
            triplet=triplet,
            virtual=virtual,
            quantization=quantization,
            regularization=regularization,
            total=triplet + virtual + quantization + regularization,
        )

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(
            self.triplet + other.triplet,
            self.virtual + other.virtual,
            self.quantization + other.quantization,
            self.regularization + other.regularization,
            self.total + other.total,
        )


ZERO_LOSS = LossBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)


def theta(x_a: np.ndarray, x_b: np.ndarray) -> float:
    """Half inner product of two relaxed codes."""
    x_a = np.asarray(x_a)
    x_b = np.asarray(x_b)
    if x_a.shape != x_b.shape:
        raise ValueError(f"length mismatch: {x_a.shape} vs {x_b.shape}")
    return 0.5 * float(np.dot(x_a, x_b))


def triplet_hinge(x_i, x_j, x_k, margin: float) -> float:
    """max(theta(i,k) - theta(i,j) + margin, 0)."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    return max(theta(x_i, x_k) - theta(x_i, x_j) + margin, 0.0)


def quantization_error(x: np.ndarray, b: np.ndarray | None = None) -> float:
    """Squared distance between a relaxed code and its binarization."""
    x = np.asarray(x)
    if b is None:
        b = sign_vector(x)
    else:
        b = np.asarray(b)
        if b.shape != x.shape:
            raise ValueError(f"length mismatch: {b.shape} vs {x.shape}")
    return float(np.sum((b - x) ** 2))


@dataclass
class Gradients:
    """Same shapes as ModelParams; the embedding gradient is kept sparse
    as (row indices, gradient rows) since a batch touches few nodes."""

    embed_idx: np.ndarray
    embed_rows: np.ndarray
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hash_w: np.ndarray
    hash_b: np.ndarray
    x0: np.ndarray

    def dense_embed(self, num_nodes: int) -> np.ndarray:
        out = np.zeros((num_nodes, self.embed_rows.shape[1]))
        out[self.embed_idx] = self.embed_rows
        return out


def _batch_indices(batch: list[Triplet], params: ModelParams, config: LossConfig):
    """Distinct node rows plus triplet index triples mapped onto them."""
    if not batch:
        raise ValueError("empty batch")
    real = [t for t in batch if t.k != VIRTUAL]
    virt = [t for t in batch if t.k == VIRTUAL]
    touched = {n for t in real for n in t} | {n for t in virt for n in (t.i, t.j)}
    if config.quant_all_nodes:
        nodes = np.arange(params.num_nodes)
        pos = {n: n for n in touched}
    else:
        nodes = np.fromiter(sorted(touched), dtype=np.int64)
        pos = {int(n): idx for idx, n in enumerate(nodes)}
    ri = np.array([pos[t.i] for t in real], dtype=np.int64)
    rj = np.array([pos[t.j] for t in real], dtype=np.int64)
    rk = np.array([pos[t.k] for t in real], dtype=np.int64)
    vi = np.array([pos[t.i] for t in virt], dtype=np.int64)
    vj = np.array([pos[t.j] for t in virt], dtype=np.int64)
    return nodes, (ri, rj, rk), (vi, vj)


def _hinge_terms(x, x0, idx_real, idx_virt, config):
    """Hinge arguments for the real and virtual triplets of a batch."""
    ri, rj, rk = idx_real
    vi, vj = idx_virt
    arg_real = (
        0.5 * np.einsum("nd,nd->n", x[ri], x[rk])
        - 0.5 * np.einsum("nd,nd->n", x[ri], x[rj])
        + config.margin
    )
    arg_virt = (
        0.5 * (x[vi] @ x0)
        - 0.5 * np.einsum("nd,nd->n", x[vi], x[vj])
        + config.virtual_margin
    )
    return arg_real, arg_virt


def regularization(params: ModelParams, config: LossConfig) -> float:
    """L2 penalty over layer weights and biases (embedding and x0 are
    already drawn toward the code alphabet by the quantization term)."""
    sq = sum(float(np.sum(w**2)) for w in params.weights)
    sq += sum(float(np.sum(b**2)) for b in params.biases)
    sq += float(np.sum(params.hash_w**2)) + float(np.sum(params.hash_b**2))
    return config.reg_weight * sq


def batch_loss(batch: list[Triplet], params: ModelParams, config: LossConfig) -> LossBreakdown:
    """Loss of one mini-batch.

    Real and virtual hinges are summed over their triplets; the
    quantization penalty covers the distinct nodes the batch touches
    (or every node with ``quant_all_nodes``); the L2 term always covers
    the full weight set.
    """
    nodes, idx_real, idx_virt = _batch_indices(batch, params, config)
    x = forward_batch(params, nodes)
    arg_real, arg_virt = _hinge_terms(x, params.x0, idx_real, idx_virt, config)

    triplet_term = float(np.maximum(arg_real, 0.0).sum())
    virtual_term = float(np.maximum(arg_virt, 0.0).sum())
    quant = config.quant_weight * float(np.sum((sign_vector(x) - x) ** 2))
    return LossBreakdown.assemble(
        triplet_term, virtual_term, quant, regularization(params, config)
    )


def batch_gradients(
    batch: list[Triplet], params: ModelParams, config: LossConfig
) -> tuple[Gradients, LossBreakdown]:
    """Exact gradients of :func:`batch_loss` by reverse-mode chain rule.

    The hinge contributes only where its argument is strictly positive;
    binarized codes are constants, so the quantization gradient w.r.t.
    a relaxed code x is 2 * quant_weight * (x - sgn(x)).
    """
    nodes, idx_real, idx_virt = _batch_indices(batch, params, config)
    x, acts = forward_cached(params, nodes)
    arg_real, arg_virt = _hinge_terms(x, params.x0, idx_real, idx_virt, config)

    triplet_term = float(np.maximum(arg_real, 0.0).sum())
    virtual_term = float(np.maximum(arg_virt, 0.0).sum())
    b = sign_vector(x)
    quant = config.quant_weight * float(np.sum((b - x) ** 2))
    breakdown = LossBreakdown.assemble(
        triplet_term, virtual_term, quant, regularization(params, config)
    )

    # d(loss)/dx, accumulated over every term that touches each node row.
    gx = 2.0 * config.quant_weight * (x - b)
    ri, rj, rk = idx_real
    vi, vj = idx_virt
    act_r = arg_real > 0
    if act_r.any():
        ari, arj, ark = ri[act_r], rj[act_r], rk[act_r]
        np.add.at(gx, ari, 0.5 * (x[ark] - x[arj]))
        np.add.at(gx, arj, -0.5 * x[ari])
        np.add.at(gx, ark, 0.5 * x[ari])
    act_v = arg_virt > 0
    g_x0 = np.zeros_like(params.x0)
    if act_v.any():
        avi, avj = vi[act_v], vj[act_v]
        np.add.at(gx, avi, 0.5 * (params.x0[None, :] - x[avj]))
        np.add.at(gx, avj, -0.5 * x[avi])
        g_x0 += 0.5 * x[avi].sum(axis=0)

    # Backward through the linear code layer and the tanh stack.
    g_hash_w = acts[-1].T @ gx + 2.0 * config.reg_weight * params.hash_w
    g_hash_b = gx.sum(axis=0) + 2.0 * config.reg_weight * params.hash_b
    da = gx @ params.hash_w.T
    g_weights, g_biases = [], []
    for layer in range(len(params.weights) - 1, -1, -1):
        dz = da * (1.0 - acts[layer + 1] ** 2)
        g_weights.append(acts[layer].T @ dz + 2.0 * config.reg_weight * params.weights[layer])
        g_biases.append(dz.sum(axis=0) + 2.0 * config.reg_weight * params.biases[layer])
        da = dz @ params.weights[layer].T
    g_weights.reverse()
    g_biases.reverse()

    grads = Gradients(
        embed_idx=nodes,
        embed_rows=da,
        weights=g_weights,
        biases=g_biases,
        hash_w=g_hash_w,
        hash_b=g_hash_b,
        x0=g_x0,
    )
    return grads, breakdown
