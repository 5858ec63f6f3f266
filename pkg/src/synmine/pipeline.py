"""End-to-end driver: dump in, synset JSONL and report JSON out.

The run is a straight line: ingest the dump, select categorical
properties, then per property build the word-piece table, the similarity
graph, prune, optionally inject a lexicon, cluster, and expand.  Every
stage is timed, and any toolkit error is wrapped with the stage name so
the caller sees where a run died and with which error class.

Everything downstream of the seed is deterministic: rerunning with the
same inputs, config, and seed produces a byte-identical synset file.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from synmine.clustering import (
    DEFAULT_LEXICON_WEIGHT,
    DEFAULT_MAX_VALUES_PER_PROPERTY,
    DEFAULT_PRUNE_FRACTION,
    DEFAULT_RESOLUTION,
    Synset,
    build_graph,
    inject_lexicon,
    load_lexicon,
    louvain,
    prune_edges,
)
from synmine.errors import ConfigError, InputError, PipelineError, SynmineError
from synmine.evaluation import MiningReport, load_gold, pooled_rand_indices, synset_stats
from synmine.expansion import (
    DEFAULT_CORES_PER_VALUE,
    DEFAULT_EXPANSION_CAP,
    DEFAULT_MIN_PCS,
    ExpandedExpression,
    expand_synset,
)
from synmine.ingest import ParseStats, build_property_index, parse_triples_path
from synmine.selection import (
    DEFAULT_MAX_WORDPIECE_LEN,
    DEFAULT_TOP_K,
    select_properties,
)
from synmine.similarity import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EMBEDDING_DIM,
    SimilarityConfig,
    provider_from_env,
)
from synmine.wordpieces import LR_ENTROPY_MODES, PMI_NORMALIZATIONS, build_table

SYNSET_FILE = "synsets.jsonl"
REPORT_FILE = "report.json"

DIRECTIONS = ("highest_pcp", "lowest_pcp")
DONOR_SCOPES = ("synset", "property")
INPUT_FORMATS = ("tsv", "ntriples_subset")


@dataclass
class PipelineConfig:
    """One knob per pipeline decision, JSON-loadable, CLI-overridable."""

    input_path: str = ""
    input_format: str = "tsv"
    output_dir: str | None = None
    gold_path: str | None = None

    top_k: int = DEFAULT_TOP_K
    direction: str = "highest_pcp"
    max_wordpiece_len: int = DEFAULT_MAX_WORDPIECE_LEN

    textual_methods: tuple[str, ...] = ("weighted_jaccard",)
    use_embeddings: bool = True
    embed_endpoint: str | None = None
    embed_dim: int = DEFAULT_EMBEDDING_DIM
    embed_batch_size: int = DEFAULT_BATCH_SIZE
    embed_cache_path: str | None = None

    prune_q: float = DEFAULT_PRUNE_FRACTION
    lexicon_path: str | None = None
    lexicon_weight: float = DEFAULT_LEXICON_WEIGHT
    seed: int = 0
    resolution: float = DEFAULT_RESOLUTION
    max_values_per_property: int = DEFAULT_MAX_VALUES_PER_PROPERTY

    cores_per_value: int = DEFAULT_CORES_PER_VALUE
    min_pcs: float = DEFAULT_MIN_PCS
    expansion_cap: int = DEFAULT_EXPANSION_CAP
    donor_scope: str = "synset"

    lrent_mode: str = "min"
    pmi_normalization: str = "length_class"
    include_singletons: bool = False
    # Not read by the miner itself; carried so one config file can also
    # drive the downstream synonym-boosting trainer.
    stop_ratio: float = 0.60

    def validate(self) -> None:
        if not self.input_path:
            raise ConfigError("input_path is required")
        if self.input_format not in INPUT_FORMATS:
            raise ConfigError(f"unknown input_format: {self.input_format!r}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"unknown direction: {self.direction!r}")
        if self.max_wordpiece_len < 1:
            raise ConfigError(f"max_wordpiece_len must be >= 1, got {self.max_wordpiece_len}")
        if not 0.0 <= self.prune_q <= 1.0:
            raise ConfigError(f"prune_q must be in [0, 1], got {self.prune_q}")
        if not 0.0 < self.lexicon_weight <= 1.0:
            raise ConfigError(f"lexicon_weight must be in (0, 1], got {self.lexicon_weight}")
        if self.resolution <= 0.0:
            raise ConfigError(f"resolution must be > 0, got {self.resolution}")
        if self.max_values_per_property < 1:
            raise ConfigError(
                f"max_values_per_property must be >= 1, got {self.max_values_per_property}"
            )
        if self.cores_per_value < 1:
            raise ConfigError(f"cores_per_value must be >= 1, got {self.cores_per_value}")
        if self.expansion_cap < 0:
            raise ConfigError(f"expansion_cap must be >= 0, got {self.expansion_cap}")
        if self.donor_scope not in DONOR_SCOPES:
            raise ConfigError(f"unknown donor_scope: {self.donor_scope!r}")
        if self.lrent_mode not in LR_ENTROPY_MODES:
            raise ConfigError(f"unknown lrent_mode: {self.lrent_mode!r}")
        if self.pmi_normalization not in PMI_NORMALIZATIONS:
            raise ConfigError(f"unknown pmi_normalization: {self.pmi_normalization!r}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.embed_batch_size < 1:
            raise ConfigError(f"embed_batch_size must be >= 1, got {self.embed_batch_size}")
        if not 0.0 < self.stop_ratio < 1.0:
            raise ConfigError(f"stop_ratio must be in (0, 1), got {self.stop_ratio}")
        SimilarityConfig(textual_methods=tuple(self.textual_methods)).validate()

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        coerced = dict(raw)
        if "textual_methods" in coerced:
            methods = coerced["textual_methods"]
            if not isinstance(methods, (list, tuple)):
                raise ConfigError("textual_methods must be a list of method names")
            coerced["textual_methods"] = tuple(methods)
        return cls(**coerced)

    @classmethod
    def load(cls, path: str, overrides: dict | None = None) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        raw.update(overrides or {})
        return cls.from_dict(raw)


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except SynmineError as exc:
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def _synset_record(synset: Synset) -> dict:
    return {
        "synset_id": synset.synset_id,
        "property": synset.property,
        "members": [{"value": v, "freq": f} for v, f in synset.members],
        "origin": synset.origin,
    }


def _expansion_record(synset: Synset, expansions: list[ExpandedExpression]) -> dict:
    return {
        "synset_id": synset.synset_id,
        "property": synset.property,
        "members": [
            {"value": e.text, "freq": 0, "host_value": e.host_value, "donor_core": e.donor_core}
            for e in expansions
        ],
        "origin": "expanded",
    }


def write_synsets(
    path: str,
    properties: list[str],
    mined: dict[str, list[Synset]],
    expansions: dict[str, list[ExpandedExpression]],
) -> None:
    """Serialize mined synsets then their expansion records, property by property."""
    with open(path, "w", encoding="utf-8") as handle:
        for prop in properties:
            by_synset: dict[str, list[ExpandedExpression]] = {}
            for e in expansions.get(prop, []):
                by_synset.setdefault(e.synset_id, []).append(e)
            for synset in mined.get(prop, []):
                handle.write(json.dumps(_synset_record(synset), ensure_ascii=False) + "\n")
            for synset in mined.get(prop, []):
                if synset.synset_id in by_synset:
                    record = _expansion_record(synset, by_synset[synset.synset_id])
                    handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_synsets(
    path: str,
) -> tuple[dict[str, list[Synset]], dict[str, list[ExpandedExpression]]]:
    """Load a synset JSONL file back into mined synsets and expansion records."""
    mined: dict[str, list[Synset]] = {}
    expansions: dict[str, list[ExpandedExpression]] = {}
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read synsets {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                origin = record["origin"]
                prop = record["property"]
                synset_id = record["synset_id"]
                members = record["members"]
                if origin == "mined":
                    mined.setdefault(prop, []).append(
                        Synset(
                            property=prop,
                            members=tuple((m["value"], int(m["freq"])) for m in members),
                            origin="mined",
                            synset_id=synset_id,
                        )
                    )
                elif origin == "expanded":
                    expansions.setdefault(prop, []).extend(
                        ExpandedExpression(
                            text=m["value"],
                            donor_core=m["donor_core"],
                            host_value=m["host_value"],
                            synset_id=synset_id,
                        )
                        for m in members
                    )
                else:
                    # InputError is not in the catch tuple below, so this aborts directly
                    raise InputError(f"synsets {path}: unknown origin {origin!r} at line {lineno}")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputError(f"synsets {path}: bad record at line {lineno}") from exc
    return mined, expansions


def run_pipeline(config: PipelineConfig) -> MiningReport:
    """Execute the whole mining run and return (and optionally write) the report."""
    config.validate()
    timings: dict[str, float] = {}
    report = MiningReport()

    with _stage("configure", timings):
        lexicon = load_lexicon(config.lexicon_path) if config.lexicon_path else None
        providers = {}
        embedding_methods: tuple[str, ...] = ()
        if config.use_embeddings:
            provider = provider_from_env(
                config.embed_endpoint,
                config.embed_dim,
                config.embed_cache_path,
                config.embed_batch_size,
            )
            providers[provider.tag] = provider
            embedding_methods = (provider.tag,)
        sim_config = SimilarityConfig(
            textual_methods=tuple(config.textual_methods),
            embedding_methods=embedding_methods,
        )

    parse_stats = ParseStats()
    with _stage("ingest", timings):
        triples = parse_triples_path(config.input_path, config.input_format, parse_stats)
        index = build_property_index(triples)

    with _stage("select", timings):
        selected = select_properties(
            index, config.top_k, config.direction, config.max_wordpiece_len
        )

    mined: dict[str, list[Synset]] = {}
    expansions: dict[str, list[ExpandedExpression]] = {}
    tables = {}
    for prop in selected:
        values = index.properties[prop]
        with _stage("table", timings):
            table = build_table(values, config.max_wordpiece_len, property=prop)
            tables[prop] = table
        with _stage("graph", timings):
            graph = build_graph(
                prop, values, sim_config, tables, providers, config.max_values_per_property
            )
        edges_total = len(graph.edges)
        with _stage("prune", timings):
            graph = prune_edges(graph, config.prune_q)
        edges_after_prune = len(graph.edges)
        if lexicon:
            with _stage("inject", timings):
                graph = inject_lexicon(graph, lexicon, config.lexicon_weight)
        with _stage("cluster", timings):
            synsets = louvain(graph, config.seed, config.resolution)
            mined[prop] = synsets
        with _stage("expand", timings):
            donors = (
                values.items_by_frequency()[: config.max_values_per_property]
                if config.donor_scope == "property"
                else None
            )
            seen: set[str] = set(values.entries)
            collected: list[ExpandedExpression] = []
            for synset in synsets:
                grown = expand_synset(
                    synset,
                    table,
                    config.cores_per_value,
                    config.min_pcs,
                    config.expansion_cap,
                    donors=donors,
                    exclude=seen,
                    lrent_mode=config.lrent_mode,
                    pmi_normalization=config.pmi_normalization,
                )
                collected.extend(grown)
                seen.update(e.text for e in grown)
            expansions[prop] = collected
        prop_stats = synset_stats(synsets, collected, config.include_singletons)
        report.per_property[prop] = {
            "values": values.distinct_count,
            "edges_total": edges_total,
            "edges_after_prune": edges_after_prune,
            "n_s": prop_stats.n_s,
            "n_sv": prop_stats.n_sv,
            "n_esv": prop_stats.n_esv,
        }

    with _stage("stats", timings):
        all_synsets = [s for prop in selected for s in mined[prop]]
        all_expansions = [e for prop in selected for e in expansions[prop]]
        totals = synset_stats(all_synsets, all_expansions, config.include_singletons)
        report.n_s = totals.n_s
        report.n_sv = totals.n_sv
        report.n_esv = totals.n_esv
        report.malformed_lines = parse_stats.malformed
        report.total_triples = index.total_triples
        report.selected_properties = list(selected)

    if config.gold_path:
        with _stage("evaluate", timings):
            gold = load_gold(config.gold_path)
            report.ri, report.ri_weighted = pooled_rand_indices(mined, gold)

    if config.output_dir:
        with _stage("write", timings):
            os.makedirs(config.output_dir, exist_ok=True)
            write_synsets(
                os.path.join(config.output_dir, SYNSET_FILE), selected, mined, expansions
            )
            report.timing = dict(timings)
            report.save(os.path.join(config.output_dir, REPORT_FILE))

    report.timing = dict(timings)
    return report
