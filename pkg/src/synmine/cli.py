"""Command-line front end.

Subcommands mirror the pipeline stages: ingest a dump into a property
index, select categorical properties, cluster a dump into synsets, expand
an existing synset file, evaluate synsets against gold labels, or run the
whole pipeline.  Every toolkit error class maps to its own exit code;
anything unexpected exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys

from synmine.errors import InputError, SynmineError
from synmine.evaluation import load_gold, pooled_rand_indices, synset_stats
from synmine.expansion import expand_synset
from synmine.ingest import ParseStats, PropertyIndex, build_property_index, parse_triples_path
from synmine.pipeline import PipelineConfig, read_synsets, run_pipeline, write_synsets
from synmine.selection import rank_scores, score_properties
from synmine.wordpieces import build_table

# Flags shared by `run` and `cluster`; dest names match PipelineConfig fields
# so collected overrides feed straight into the config.
_CONFIG_FLAGS: list[tuple[str, dict]] = [
    ("--input", {"dest": "input_path", "help": "triple dump to mine"}),
    ("--format", {"dest": "input_format", "choices": ["tsv", "ntriples_subset"], "help": "dump format"}),
    ("--output-dir", {"dest": "output_dir", "help": "directory for synsets.jsonl and report.json"}),
    ("--gold", {"dest": "gold_path", "help": "gold labels JSON for Rand Index"}),
    ("--top-k", {"dest": "top_k", "type": int, "help": "number of properties to keep"}),
    ("--direction", {"dest": "direction", "choices": ["highest_pcp", "lowest_pcp"], "help": "which end of the score to keep"}),
    ("--max-wordpiece-len", {"dest": "max_wordpiece_len", "type": int, "help": "longest substring counted as a word-piece"}),
    ("--prune-q", {"dest": "prune_q", "type": float, "help": "fraction of weakest edges to clear"}),
    ("--lexicon", {"dest": "lexicon_path", "help": "synonym lexicon JSONL to inject"}),
    ("--lexicon-weight", {"dest": "lexicon_weight", "type": float, "help": "edge weight for virtual lexicon nodes"}),
    ("--seed", {"dest": "seed", "type": int, "help": "clustering shuffle seed"}),
    ("--resolution", {"dest": "resolution", "type": float, "help": "modularity resolution"}),
    ("--max-values-per-property", {"dest": "max_values_per_property", "type": int, "help": "cap on values entering the pair sweep"}),
    ("--cores-per-value", {"dest": "cores_per_value", "type": int, "help": "core parts detected per value"}),
    ("--min-pcs", {"dest": "min_pcs", "type": float, "help": "minimum core-semantics score"}),
    ("--expansion-cap", {"dest": "expansion_cap", "type": int, "help": "max expansions per synset"}),
    ("--donor-scope", {"dest": "donor_scope", "choices": ["synset", "property"], "help": "where donor cores come from"}),
    ("--lrent-mode", {"dest": "lrent_mode", "choices": ["min", "avg"], "help": "neighbor entropy aggregation"}),
    ("--pmi-normalization", {"dest": "pmi_normalization", "choices": ["length_class", "all_pieces"], "help": "PMI probability normalization"}),
    ("--embed-endpoint", {"dest": "embed_endpoint", "help": "embedding service URL (default: env, else local hashing)"}),
    ("--embed-dim", {"dest": "embed_dim", "type": int, "help": "hashing provider dimension"}),
    ("--embed-batch-size", {"dest": "embed_batch_size", "type": int, "help": "texts per embedding request"}),
    ("--embed-cache", {"dest": "embed_cache_path", "help": "embedding cache JSONL path"}),
    ("--stop-ratio", {"dest": "stop_ratio", "type": float, "help": "carried through for the downstream trainer"}),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON; flags override its keys")
    for flag, kwargs in _CONFIG_FLAGS:
        parser.add_argument(flag, default=None, **kwargs)
    parser.add_argument(
        "--no-embeddings",
        dest="use_embeddings",
        action="store_false",
        default=None,
        help="textual similarity only",
    )
    parser.add_argument(
        "--include-singletons",
        dest="include_singletons",
        action="store_true",
        default=None,
        help="count single-member synsets in the stats",
    )


def _collect_overrides(args: argparse.Namespace) -> dict:
    fields = [kwargs["dest"] for _, kwargs in _CONFIG_FLAGS] + [
        "use_embeddings",
        "include_singletons",
    ]
    return {name: getattr(args, name) for name in fields if getattr(args, name, None) is not None}


def _build_config(args: argparse.Namespace, forced: dict | None = None) -> PipelineConfig:
    overrides = _collect_overrides(args)
    overrides.update(forced or {})
    if args.config:
        return PipelineConfig.load(args.config, overrides)
    return PipelineConfig.from_dict(overrides)


def _print_report(report) -> None:
    print(json.dumps(report.to_json_dict(), ensure_ascii=False, indent=2, sort_keys=True))


def cmd_ingest(args: argparse.Namespace) -> int:
    stats = ParseStats()
    triples = parse_triples_path(args.input, args.format, stats)
    index = build_property_index(triples)
    index.save(args.output)
    print(
        f"parsed {stats.parsed} triples ({stats.malformed} malformed) "
        f"across {len(index.properties)} properties -> {args.output}"
    )
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    index = PropertyIndex.load(args.index)
    ranked = rank_scores(score_properties(index, args.max_wordpiece_len), args.direction)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        out.write("predicate\tpcp\tvalue_entropy\twordpiece_entropy\tchar_count\n")
        for score in ranked[: args.top_k]:
            out.write(
                f"{score.predicate}\t{score.pcp:g}\t{score.value_entropy:.6f}"
                f"\t{score.wordpiece_entropy:.6f}\t{score.char_count}\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    report = run_pipeline(_build_config(args))
    _print_report(report)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    report = run_pipeline(_build_config(args, forced={"expansion_cap": 0}))
    _print_report(report)
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    mined, _ = read_synsets(args.synsets)
    stats = ParseStats()
    index = build_property_index(parse_triples_path(args.input, args.format, stats))
    expansions = {}
    for prop, synsets in mined.items():
        if prop not in index.properties:
            raise InputError(f"synset property {prop!r} does not occur in {args.input}")
        values = index.properties[prop]
        table = build_table(values, args.max_wordpiece_len, property=prop)
        donors = values.items_by_frequency() if args.donor_scope == "property" else None
        seen: set[str] = set(values.entries)
        grown_all = []
        for synset in synsets:
            grown = expand_synset(
                synset,
                table,
                args.cores_per_value,
                args.min_pcs,
                args.expansion_cap,
                donors=donors,
                exclude=seen,
            )
            grown_all.extend(grown)
            seen.update(e.text for e in grown)
        expansions[prop] = grown_all
    write_synsets(args.output, list(mined), mined, expansions)
    total = sum(len(v) for v in expansions.values())
    print(f"expanded {sum(len(v) for v in mined.values())} synsets by {total} expressions -> {args.output}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    mined, expansions = read_synsets(args.synsets)
    gold = load_gold(args.gold)
    ri, ri_weighted = pooled_rand_indices(mined, gold)
    all_synsets = [s for group in mined.values() for s in group]
    all_expansions = [e for group in expansions.values() for e in group]
    stats = synset_stats(all_synsets, all_expansions, args.include_singletons)
    print(
        json.dumps(
            {
                "N_S": stats.n_s,
                "N_sv": stats.n_sv,
                "N_esv": stats.n_esv,
                "RI_wo_f": ri,
                "RI_w_f": ri_weighted,
            },
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synmine",
        description="Mine and expand synonym sets from triple dumps of an open knowledge graph.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse a dump into a property index JSON")
    p_ingest.add_argument("--input", required=True, help="triple dump path")
    p_ingest.add_argument("--format", default="tsv", choices=["tsv", "ntriples_subset"])
    p_ingest.add_argument("--output", required=True, help="property index JSON path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_select = sub.add_parser("select", help="rank properties by how categorical they look")
    p_select.add_argument("--index", required=True, help="property index JSON from ingest")
    p_select.add_argument("--top-k", type=int, default=5000)
    p_select.add_argument("--direction", default="highest_pcp", choices=["highest_pcp", "lowest_pcp"])
    p_select.add_argument("--max-wordpiece-len", type=int, default=6)
    p_select.add_argument("--output", help="write the score table here instead of stdout")
    p_select.set_defaults(func=cmd_select)

    p_cluster = sub.add_parser("cluster", help="full mining run without the expansion step")
    _add_config_flags(p_cluster)
    p_cluster.set_defaults(func=cmd_cluster)

    p_expand = sub.add_parser("expand", help="grow an existing synset file by core-part swaps")
    p_expand.add_argument("--synsets", required=True, help="synset JSONL to expand")
    p_expand.add_argument("--input", required=True, help="the dump the synsets were mined from")
    p_expand.add_argument("--format", default="tsv", choices=["tsv", "ntriples_subset"])
    p_expand.add_argument("--output", required=True, help="combined synset JSONL to write")
    p_expand.add_argument("--max-wordpiece-len", type=int, default=6)
    p_expand.add_argument("--cores-per-value", type=int, default=2)
    p_expand.add_argument("--min-pcs", type=float, default=0.0)
    p_expand.add_argument("--expansion-cap", type=int, default=64)
    p_expand.add_argument("--donor-scope", default="synset", choices=["synset", "property"])
    p_expand.set_defaults(func=cmd_expand)

    p_eval = sub.add_parser("eval", help="score a synset file against gold labels")
    p_eval.add_argument("--synsets", required=True)
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--include-singletons", action="store_true", default=False)
    p_eval.set_defaults(func=cmd_eval)

    p_run = sub.add_parser("run", help="the whole pipeline: ingest through expansion and report")
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SynmineError as exc:
        print(f"synmine: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        print(f"synmine: unexpected error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
