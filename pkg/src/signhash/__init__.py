"""Binary hash-code embeddings for signed social networks."""

from .graph import GraphStats, SignedGraph, build_graph, load_graph, parse_edge_list
from .hamming import CodeMatrix, hamming, knn, load_codes, save_codes
from .linkpred import OPERATORS, EvalReport, auc, edge_features, evaluate, fit_logistic
from .model import (
    ModelConfig,
    ModelParams,
    binarize,
    encode_all,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .objective import (
    LossBreakdown,
    LossConfig,
    batch_gradients,
    batch_loss,
    quantization_error,
    theta,
    triplet_hinge,
)
from .synth import SynthConfig, planted_partition
from .train import (
    DivergenceError,
    TrainConfig,
    TrainReport,
    lr_at,
    lr_range_test,
    synthetic_train_config,
    train,
)
from .triplets import VIRTUAL, Triplet, TripletCorpus, batches, build_triplets

__version__ = "0.1.0"
