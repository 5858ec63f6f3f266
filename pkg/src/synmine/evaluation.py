"""Clustering quality metrics and the mining run report.

The Rand Index compares the mined partition against a gold labeling, in
two modes: every value counted once, or every value counted as many times
as it occurred in the source dump.  The weighted mode uses the replication
reading literally (a value of frequency f stands for f identical copies)
but computes it in closed form from the contingency table, all in integer
arithmetic until the final division.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping

from synmine.clustering import Synset
from synmine.errors import DomainError, InputError
from synmine.expansion import ExpandedExpression

REPORT_VERSION = 1


@dataclass(frozen=True)
class GoldLabeling:
    """Reference clustering: each value mapped to exactly one gold id."""

    assignments: dict[str, object]


def load_gold(path: str) -> dict[str, GoldLabeling]:
    """Read gold labels from JSON shaped {property: {value: gold_id}}."""
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read gold labels {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"gold labels {path} are not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"gold labels {path} must be an object keyed by property")
    gold: dict[str, GoldLabeling] = {}
    for prop, assignments in raw.items():
        if not isinstance(assignments, dict) or not assignments:
            raise InputError(f"gold labels for property {prop!r} must be a non-empty object")
        gold[prop] = GoldLabeling(assignments=dict(assignments))
    return gold


def rand_index(
    pred: Iterable[Iterable[str]],
    gold: GoldLabeling | Mapping[str, object],
    frequency_weighted: bool = False,
    freqs: Mapping[str, int] | None = None,
) -> float:
    """Fraction of element pairs on which the two clusterings agree.

    In weighted mode each element stands for freq copies of itself; copies
    of one element always agree (same cluster on both sides), and the pair
    counts come from the contingency table via the identity

        agree = C(N,2) - sum_p C(a_p,2) - sum_g C(b_g,2) + 2 sum C(n_pg,2)

    with cluster and cell masses summed over frequencies.
    """
    assignments = gold.assignments if isinstance(gold, GoldLabeling) else dict(gold)
    pred_of: dict[str, int] = {}
    for idx, cluster in enumerate(pred):
        for value in cluster:
            if value in pred_of:
                raise DomainError(f"value {value!r} appears in two predicted clusters")
            pred_of[value] = idx
    missing_in_pred = sorted(set(assignments) - set(pred_of))
    missing_in_gold = sorted(set(pred_of) - set(assignments))
    if missing_in_pred or missing_in_gold:
        raise InputError(
            "prediction and gold cover different values; "
            f"missing from prediction: {missing_in_pred[:10]}, "
            f"missing from gold: {missing_in_gold[:10]}"
        )

    def mass(value: str) -> int:
        if not frequency_weighted:
            return 1
        if freqs is None or value not in freqs:
            raise InputError(f"no frequency recorded for value {value!r}")
        f = freqs[value]
        if f < 1:
            raise DomainError(f"frequency of {value!r} must be >= 1, got {f}")
        return f

    pred_mass: dict[int, int] = {}
    gold_mass: dict[object, int] = {}
    cell_mass: dict[tuple[int, object], int] = {}
    total = 0
    for value, gold_id in assignments.items():
        m = mass(value)
        p = pred_of[value]
        total += m
        pred_mass[p] = pred_mass.get(p, 0) + m
        gold_mass[gold_id] = gold_mass.get(gold_id, 0) + m
        cell_mass[(p, gold_id)] = cell_mass.get((p, gold_id), 0) + m
    all_pairs = comb(total, 2)
    if all_pairs == 0:
        raise DomainError("Rand Index needs at least two elements (counting multiplicity)")
    agree = (
        all_pairs
        - sum(comb(a, 2) for a in pred_mass.values())
        - sum(comb(b, 2) for b in gold_mass.values())
        + 2 * sum(comb(c, 2) for c in cell_mass.values())
    )
    return agree / all_pairs


def pooled_rand_indices(
    mined: Mapping[str, Iterable[Synset]],
    gold: Mapping[str, GoldLabeling],
    freqs: Mapping[str, Mapping[str, int]] | None = None,
) -> tuple[float, float]:
    """Rand Index over all gold-labeled properties at once, both modes.

    Values from different properties can never share a cluster, so the
    per-property partitions pool into one big one; gold ids are namespaced
    by property to keep that side consistent.  Frequencies default to the
    ones carried on the synset members.

    Returns (unweighted, frequency-weighted).
    """
    pooled_gold: dict[str, object] = {}
    pooled_freqs: dict[str, int] = {}
    pooled_pred: list[list[str]] = []
    for prop in sorted(gold):
        for value, gold_id in gold[prop].assignments.items():
            pooled_gold[f"{prop}\t{value}"] = f"{prop}\t{gold_id}"
        override = freqs.get(prop) if freqs else None
        for synset in mined.get(prop, []):
            cluster = []
            for value, freq in synset.members:
                key = f"{prop}\t{value}"
                cluster.append(key)
                pooled_freqs[key] = override[value] if override and value in override else freq
            pooled_pred.append(cluster)
    unweighted = rand_index(pooled_pred, pooled_gold, frequency_weighted=False)
    weighted = rand_index(pooled_pred, pooled_gold, frequency_weighted=True, freqs=pooled_freqs)
    return unweighted, weighted


@dataclass(frozen=True)
class SynsetStats:
    n_s: int
    n_sv: int
    n_esv: int


def synset_stats(
    synsets: Iterable[Synset],
    expansions: Iterable[ExpandedExpression] = (),
    include_singletons: bool = False,
) -> SynsetStats:
    """Counts over the mined output: synsets, their values, and expansions.

    Singleton synsets are excluded by default, and so are their values;
    n_esv adds the distinct expanded expressions on top of n_sv.
    """
    counted = [s for s in synsets if include_singletons or len(s.members) >= 2]
    values = {member for s in counted for member, _ in s.members}
    expanded_texts = {e.text for e in expansions}
    return SynsetStats(n_s=len(counted), n_sv=len(values), n_esv=len(values) + len(expanded_texts))


@dataclass
class MiningReport:
    """Everything a run reports, serialized with the customary metric labels."""

    n_s: int = 0
    n_sv: int = 0
    n_esv: int = 0
    ri: float | None = None
    ri_weighted: float | None = None
    per_property: dict[str, dict] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    malformed_lines: int = 0
    total_triples: int = 0
    selected_properties: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "N_S": self.n_s,
            "N_sv": self.n_sv,
            "N_esv": self.n_esv,
            "RI_w_f": self.ri_weighted,
            "RI_wo_f": self.ri,
            "per_property": self.per_property,
            "timing_seconds": self.timing,
            "malformed_lines": self.malformed_lines,
            "total_triples": self.total_triples,
            "selected_properties": self.selected_properties,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, ensure_ascii=False, indent=2, sort_keys=True)
            handle.write("\n")
