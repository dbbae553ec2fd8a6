"""Mini-batch SGD over the triplet corpus with linear LR decay.

The corpus is built once and reshuffled every epoch from a single seeded
stream, so a (config, seed) pair maps to exactly one parameter
trajectory. A geometric learning-rate sweep is included for picking the
initial rate.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import SignedGraph
from .model import ModelConfig, ModelParams, init_params
from .objective import Gradients, LossConfig, ZERO_LOSS, batch_gradients, batch_loss
from .triplets import TripletCorpus, batches, build_triplets

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = ModelConfig()
    loss: LossConfig = LossConfig()
    lr_init: float = 0.009
    lr_final: float | None = None    # defaults to lr_init / 10
    epochs: int = 100
    batch_size: int = 512
    seed: int = 0
    directed_triplets: bool = False
    two_hop_virtual: bool = False

    @property
    def lr_last(self) -> float:
        return self.lr_init / 10.0 if self.lr_final is None else self.lr_final

    def validate(self) -> None:
        self.model.validate()
        self.loss.validate(self.model.code_dim)
        if not self.lr_init >= self.lr_last > 0:
            raise ValueError("need lr_init >= lr_final > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainReport:
    lr: list[float] = field(default_factory=list)
    total: list[float] = field(default_factory=list)
    triplet: list[float] = field(default_factory=list)
    virtual: list[float] = field(default_factory=list)
    quantization: list[float] = field(default_factory=list)
    regularization: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    @property
    def num_epochs(self) -> int:
        return len(self.total)

    def to_tsv_lines(self) -> list[str]:
        # Wall-clock stays out of the file so reruns are byte-identical.
        return [
            f"{e}\t{self.lr[e]!r}\t{self.total[e]!r}\t{self.triplet[e]!r}"
            f"\t{self.virtual[e]!r}\t{self.quantization[e]!r}"
            f"\t{self.regularization[e]!r}"
            for e in range(self.num_epochs)
        ]


def synthetic_train_config(code_dim: int = 32, seed: int = 0) -> TrainConfig:
    """Desk-scale defaults for the planted-partition experiments.

    The real-dataset presets assume batches that touch a tiny fraction
    of a 100k-node graph; on a graph of ~100 nodes their summed batch
    updates diverge, so the synthetic pipeline uses a smaller network,
    margins scaled to the shorter codes, and a gentler rate.
    """
    return TrainConfig(
        model=ModelConfig(
            embed_dim=64, hidden_dims=(64, 64, 64), code_dim=code_dim, seed=seed
        ),
        loss=LossConfig(margin=8.0, virtual_margin=4.0, quant_weight=0.55),
        lr_init=1e-3,
        epochs=100,
        batch_size=128,
        seed=seed,
    )


def lr_at(config: TrainConfig, epoch: int) -> float:
    """Linearly decayed learning rate for one epoch."""
    if not 0 <= epoch < config.epochs:
        raise ValueError(f"epoch {epoch} out of range [0, {config.epochs})")
    if config.epochs == 1:
        return config.lr_init
    frac = epoch / (config.epochs - 1)
    return config.lr_init + (config.lr_last - config.lr_init) * frac


def apply_update(params: ModelParams, grads: Gradients, lr: float) -> None:
    """Plain SGD step, param <- param - lr * grad, in place."""
    params.embed[grads.embed_idx] -= lr * grads.embed_rows
    for w, g in zip(params.weights, grads.weights):
        w -= lr * g
    for b, g in zip(params.biases, grads.biases):
        b -= lr * g
    params.hash_w -= lr * grads.hash_w
    params.hash_b -= lr * grads.hash_b
    params.x0 -= lr * grads.x0


def run_epoch(
    params: ModelParams,
    corpus: TripletCorpus,
    loss_config: LossConfig,
    batch_size: int,
    rng,
    lr: float = 0.0,
    update: bool = True,
):
    """One pass over the shuffled corpus; returns the summed breakdown.

    With ``update=False`` the parameters are left untouched, which turns
    the pass into a pure evaluation of the corpus loss.
    """
    epoch_loss = ZERO_LOSS
    for batch in batches(corpus, batch_size, rng):
        if update:
            grads, terms = batch_gradients(batch, params, loss_config)
        else:
            terms = batch_loss(batch, params, loss_config)
        if not np.isfinite(terms.total):
            raise DivergenceError(
                f"non-finite loss {terms.total} at lr={lr}; "
                "reduce the learning rate or the quantization weight"
            )
        if update:
            apply_update(params, grads, lr)
        epoch_loss = epoch_loss + terms
    return epoch_loss


def corpus_loss(
    params: ModelParams,
    corpus: TripletCorpus,
    loss_config: LossConfig,
) -> float:
    """Loss of the whole corpus evaluated as a single batch."""
    return batch_loss(corpus.combined(), params, loss_config).total


def train(graph: SignedGraph, config: TrainConfig) -> tuple[ModelParams, TrainReport]:
    """Full training loop; deterministic for a fixed config."""
    config.validate()
    corpus = build_triplets(
        graph,
        directed=config.directed_triplets,
        two_hop_virtual=config.two_hop_virtual,
    )
    params = init_params(graph.num_nodes, config.model)
    shuffle_rng = np.random.default_rng(config.seed)
    report = TrainReport()
    for epoch in range(config.epochs):
        lr = lr_at(config, epoch)
        started = time.perf_counter()
        terms = run_epoch(
            params, corpus, config.loss, config.batch_size, shuffle_rng, lr=lr
        )
        report.lr.append(lr)
        report.total.append(terms.total)
        report.triplet.append(terms.triplet)
        report.virtual.append(terms.virtual)
        report.quantization.append(terms.quantization)
        report.regularization.append(terms.regularization)
        report.seconds.append(time.perf_counter() - started)
        log.info(
            "epoch %d lr=%.3g loss=%.6g (triplet=%.4g virtual=%.4g "
            "quant=%.4g reg=%.4g) %.2fs",
            epoch,
            lr,
            terms.total,
            terms.triplet,
            terms.virtual,
            terms.quantization,
            terms.regularization,
            report.seconds[-1],
        )
    return params, report


def lr_range_test(
    graph: SignedGraph,
    config: TrainConfig,
    lr_min: float = 1e-5,
    lr_max: float = 1.0,
    steps: int = 100,
) -> list[tuple[float, float]]:
    """Sweep geometrically increasing learning rates, one batch each.

    Every step records (lr, batch loss at the current parameters) and
    then applies one SGD update at that rate. A non-finite loss is
    recorded and ends the sweep early instead of raising.
    """
    config.validate()
    if not 0 < lr_min < lr_max:
        raise ValueError("need 0 < lr_min < lr_max")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    corpus = build_triplets(
        graph,
        directed=config.directed_triplets,
        two_hop_virtual=config.two_hop_virtual,
    )
    params = init_params(graph.num_nodes, config.model)
    rng = np.random.default_rng(config.seed)
    lrs = lr_min * (lr_max / lr_min) ** (np.arange(steps) / (steps - 1))
    lrs[0], lrs[-1] = lr_min, lr_max  # exact endpoints despite float powers

    history: list[tuple[float, float]] = []

    def batch_stream():
        while True:
            yield from batches(corpus, config.batch_size, rng)

    stream = batch_stream()
    for lr in lrs:
        batch = next(stream)
        grads, terms = batch_gradients(batch, params, config.loss)
        history.append((float(lr), terms.total))
        if not np.isfinite(terms.total):
            log.warning("lr range test diverged at lr=%.3g, stopping", lr)
            break
        apply_update(params, grads, lr)
    return history
