"""Command line entry points: train on mined synsets, or just dump the pairs."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from synboost.config import BoostConfig
from synboost.data import load_corpus, load_synsets, make_sentence_pairs, make_token_pairs
from synboost.errors import SynboostError
from synboost.train import build_model, run_training


def _config_from_args(args: argparse.Namespace) -> BoostConfig:
    overrides = {}
    for key in (
        "stop_ratio",
        "sentence_loss_weight",
        "learning_rate",
        "epochs",
        "seed",
        "include_expanded",
    ):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.config:
        config = BoostConfig.load(args.config, overrides)
    else:
        config = dataclasses.replace(BoostConfig(), **overrides)
    config.validate()
    return config


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    os.makedirs(args.output_dir, exist_ok=True)
    metrics_path = os.path.join(args.output_dir, "metrics.jsonl")
    weights_path = os.path.join(args.output_dir, "weights.pt")
    _, token_pairs, sentence_pairs, result = run_training(
        args.synsets, args.corpus, config, metrics_path=metrics_path, weights_path=weights_path
    )
    last = result.metrics[-1] if result.metrics else {"gate_closed_fraction": 1.0, "mean_distance": 0.0}
    print(
        f"trained {result.epochs_run} epochs"
        f" | token pairs {len(token_pairs)}"
        f" | sentence pairs {len(sentence_pairs)}"
        f" | gates closed {last['gate_closed_fraction']:.0%}"
        f" | mean distance {last['mean_distance']:.4f}"
        f" -> {args.output_dir}"
    )
    return 0


def _cmd_pairs(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    synsets = load_synsets(args.synsets, include_expanded=config.include_expanded)
    corpus = load_corpus(args.corpus)
    model = build_model(synsets, corpus, config)
    for pair in make_token_pairs(synsets, model.expressions):
        record = {"kind": "token", "anchor": pair.anchor, "other": pair.other, "d0": pair.d0}
        print(json.dumps(record, ensure_ascii=False))
    for pair in make_sentence_pairs(corpus, synsets, model.encoder, seed=config.seed):
        record = {
            "kind": "sentence",
            "source": pair.source,
            "variant": pair.variant,
            "replaced": pair.replaced,
            "replacement": pair.replacement,
            "d0": pair.d0,
        }
        print(json.dumps(record, ensure_ascii=False))
    return 0


def _add_shared_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--synsets", required=True, help="miner synset JSONL")
    parser.add_argument("--corpus", required=True, help="UTF-8 text, one sentence per line")
    parser.add_argument("--config", help="JSON config file; the miner's file works unchanged")
    parser.add_argument("--stop-ratio", dest="stop_ratio", type=float, default=None)
    parser.add_argument(
        "--sentence-loss-weight", dest="sentence_loss_weight", type=float, default=None
    )
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--include-expanded",
        dest="include_expanded",
        action="store_const",
        const=True,
        default=None,
        help="let expansion texts join the sentence substitution pool",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synboost", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    train_parser = commands.add_parser("train", help="train the toy encoder on mined synsets")
    _add_shared_arguments(train_parser)
    train_parser.add_argument("--output-dir", required=True, help="metrics.jsonl and weights.pt go here")
    train_parser.set_defaults(handler=_cmd_train)

    pairs_parser = commands.add_parser("pairs", help="print the mined training pairs as JSONL")
    _add_shared_arguments(pairs_parser)
    pairs_parser.set_defaults(handler=_cmd_pairs)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SynboostError as error:
        print(f"synboost: {error.code}: {error}", file=sys.stderr)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
