"""Command-line surface: the full pipeline as subcommands.

Hyper-parameters resolve in order: built-in defaults, then a named
preset, then a key=value config file, then explicit flags. Every command
is reproducible: identical inputs and seed give byte-identical output
files.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .graph import EdgeListError, load_graph, write_edge_list
from .hamming import knn as hamming_knn
from .hamming import load_codes, save_codes
from .linkpred import OPERATORS, evaluate
from .model import ModelConfig, encode_all, load_checkpoint, save_checkpoint
from .objective import LossConfig
from .synth import SynthConfig, planted_partition
from .train import DivergenceError, TrainConfig, lr_range_test, train
from .triplets import build_triplets, dump_triplets

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Bad flag, config key, or config value."""


# keys a config file / --set may carry, with their parsers
_BOOL = {"1": True, "0": False, "true": True, "false": False}
CONFIG_KEYS = {
    "embed_dim": int,
    "hidden_dims": lambda s: tuple(int(p) for p in s.split(",") if p),
    "code_dim": int,
    "margin": float,
    "virtual_margin": float,
    "quant_weight": float,
    "reg_weight": float,
    "quant_all_nodes": lambda s: _BOOL[s.lower()],
    "lr": float,
    "lr_final": float,
    "epochs": int,
    "batch_size": int,
    "seed": int,
    "directed_triplets": lambda s: _BOOL[s.lower()],
    "two_hop_virtual": lambda s: _BOOL[s.lower()],
}

PRESETS = {
    # dense network defaults
    "epinions": {"margin": 24.0, "virtual_margin": 12.0, "quant_weight": 40.0, "lr": 0.009},
    # sparser network: smaller margins, much lighter quantization pull
    "slashdot": {"margin": 16.0, "virtual_margin": 8.0, "quant_weight": 0.55, "lr": 0.009},
}

DEFAULTS = {
    "embed_dim": 200,
    "hidden_dims": (320, 320, 320),
    "code_dim": 256,
    "margin": 24.0,
    "virtual_margin": None,  # resolved to margin / 2
    "quant_weight": 40.0,
    "reg_weight": 1e-4,
    "quant_all_nodes": False,
    "lr": 0.009,
    "lr_final": None,        # resolved to lr / 10 by TrainConfig
    "epochs": 100,
    "batch_size": 512,
    "seed": 0,
    "directed_triplets": False,
    "two_hop_virtual": False,
}


def parse_config_file(path) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in CONFIG_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[key] = CONFIG_KEYS[key](value.strip())
                except (ValueError, KeyError):
                    raise ConfigError(
                        f"{path}:{lineno}: bad value for {key}: {value.strip()!r}"
                    ) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return values


def dump_config(path, values: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in CONFIG_KEYS:
            value = values[key]
            if key == "hidden_dims":
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "1" if value else "0"
            fh.write(f"{key}={value}\n")


def resolve_config(args) -> dict:
    """Merge defaults, preset, config file, and explicit flags."""
    values = dict(DEFAULTS)
    preset = getattr(args, "preset", None)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, have {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(parse_config_file(config_path))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if values["virtual_margin"] is None:
        values["virtual_margin"] = values["margin"] / 2.0
    if values["lr_final"] is None:
        values["lr_final"] = values["lr"] / 10.0
    return values


def train_config_from(values: dict) -> TrainConfig:
    return TrainConfig(
        model=ModelConfig(
            embed_dim=values["embed_dim"],
            hidden_dims=tuple(values["hidden_dims"]),
            code_dim=values["code_dim"],
            seed=values["seed"],
        ),
        loss=LossConfig(
            margin=values["margin"],
            virtual_margin=values["virtual_margin"],
            quant_weight=values["quant_weight"],
            reg_weight=values["reg_weight"],
            quant_all_nodes=values["quant_all_nodes"],
        ),
        lr_init=values["lr"],
        lr_final=values["lr_final"],
        epochs=values["epochs"],
        batch_size=values["batch_size"],
        seed=values["seed"],
        directed_triplets=values["directed_triplets"],
        two_hop_virtual=values["two_hop_virtual"],
    )


def _write_lines(path, lines) -> None:
    if path is None:
        for line in lines:
            print(line)
        return
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


# ---------------------------------------------------------------- commands


def cmd_stats(args) -> int:
    s = load_graph(args.graph).stats()
    _write_lines(
        None,
        [
            f"num_nodes\t{s.num_nodes}",
            f"num_pos_links\t{s.num_pos_links}",
            f"num_neg_links\t{s.num_neg_links}",
            f"pos_fraction\t{s.pos_fraction!r}",
        ],
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    config = SynthConfig(
        blocks=args.blocks,
        block_size=args.block_size,
        edge_prob=args.edge_prob,
        noise=args.noise,
        seed=args.seed,
    )
    edges, num_pos, num_neg = planted_partition(config)
    write_edge_list(args.out, edges)
    print(f"num_pos\t{num_pos}")
    print(f"num_neg\t{num_neg}")
    return EXIT_OK


def cmd_sample(args) -> int:
    graph = load_graph(args.graph)
    corpus = build_triplets(
        graph,
        directed=bool(args.directed_triplets),
        two_hop_virtual=bool(args.two_hop_virtual),
    )
    dump_triplets(args.out, corpus)
    print(f"real\t{len(corpus.t_real)}")
    print(f"virtual\t{len(corpus.t_virtual)}")
    return EXIT_OK


def cmd_train(args) -> int:
    values = resolve_config(args)
    if args.dump_config:
        dump_config(args.dump_config, values)
    config = train_config_from(values)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    graph = load_graph(args.graph)
    params, report = train(graph, config)
    save_checkpoint(args.checkpoint, params, config.model)
    if args.report:
        _write_lines(args.report, report.to_tsv_lines())
    return EXIT_OK


def cmd_encode(args) -> int:
    params, _ = load_checkpoint(args.checkpoint)
    save_codes(args.codes, encode_all(params))
    return EXIT_OK


def cmd_knn(args) -> int:
    matrix = load_codes(args.codes)
    lines = []
    for query in args.query:
        if not 0 <= query < matrix.num_nodes:
            raise ValueError(f"query node {query} not in the code matrix")
        for rank, (node, dist) in enumerate(hamming_knn(matrix, matrix.row(query), args.k), 1):
            lines.append(f"{query}\t{rank}\t{node}\t{dist}")
    _write_lines(args.out, lines)
    return EXIT_OK


def cmd_eval(args) -> int:
    graph = load_graph(args.graph)
    matrix = load_codes(args.codes)
    if matrix.num_nodes < graph.num_nodes:
        raise ValueError(
            f"codes cover {matrix.num_nodes} nodes but the graph has {graph.num_nodes}"
        )
    operators = tuple(args.operators.split(","))
    for op in operators:
        if op not in OPERATORS:
            raise ConfigError(f"unknown operator {op!r}, expected one of {OPERATORS}")
    report = evaluate(graph, matrix, operators=operators, folds=args.folds, seed=args.seed)
    _write_lines(args.out, report.to_tsv_lines())
    return EXIT_OK


def cmd_lr_range(args) -> int:
    values = resolve_config(args)
    config = train_config_from(values)
    graph = load_graph(args.graph)
    history = lr_range_test(
        graph, config, lr_min=args.lr_min, lr_max=args.lr_max, steps=args.steps
    )
    _write_lines(args.out, [f"{lr!r}\t{loss!r}" for lr, loss in history])
    return EXIT_OK


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_hyper_flags(parser) -> None:
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named hyper-parameter preset")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--embed-dim", dest="embed_dim", type=int)
    parser.add_argument(
        "--hidden-dims", dest="hidden_dims", type=CONFIG_KEYS["hidden_dims"],
        help="comma-separated layer widths, e.g. 320,320,320",
    )
    parser.add_argument("--code-dim", dest="code_dim", type=int)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--virtual-margin", dest="virtual_margin", type=float)
    parser.add_argument("--quant-weight", dest="quant_weight", type=float)
    parser.add_argument("--reg-weight", dest="reg_weight", type=float)
    parser.add_argument(
        "--quant-all-nodes", dest="quant_all_nodes", action="store_const", const=True
    )
    parser.add_argument("--lr", type=float)
    parser.add_argument("--lr-final", dest="lr_final", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument(
        "--directed-triplets", dest="directed_triplets", action="store_const", const=True
    )
    parser.add_argument(
        "--two-hop-virtual", dest="two_hop_virtual", action="store_const", const=True
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signhash", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="parse a signed edge list and print its counts")
    p.add_argument("graph")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a planted-partition signed graph")
    p.add_argument("--out", required=True)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--block-size", dest="block_size", type=int, default=30)
    p.add_argument("--edge-prob", dest="edge_prob", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="dump the triplet corpus of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--directed-triplets", dest="directed_triplets", action="store_true")
    p.add_argument("--two-hop-virtual", dest="two_hop_virtual", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the hash network on a signed graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--report", help="write per-epoch loss table here")
    p.add_argument("--dump-config", dest="dump_config", help="write the effective config here")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="emit binary codes for every node")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--codes", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("knn", help="exact Hamming nearest neighbours of node codes")
    p.add_argument("--codes", required=True)
    p.add_argument("--query", type=int, action="append", required=True)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("eval", help="cross-validated link prediction AUC")
    p.add_argument("--graph", required=True)
    p.add_argument("--codes", required=True)
    p.add_argument("--operators", default=",".join(OPERATORS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lr-range", help="geometric learning-rate sweep")
    p.add_argument("--graph", required=True)
    p.add_argument("--lr-min", dest="lr_min", type=float, default=1e-5)
    p.add_argument("--lr-max", dest="lr_max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_lr_range)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, stream=sys.stderr)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EdgeListError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
