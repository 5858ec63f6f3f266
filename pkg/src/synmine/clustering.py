"""Per-property similarity graphs and their clustering into synsets.

The pipeline turns one property's values into a weighted graph (edges are
positive pairwise similarities), clears a fraction of the weakest edges,
optionally pins known synonym groups together with virtual lexicon nodes,
and runs Louvain community detection.  Every community of real value nodes
becomes one mined synset.

Louvain is written out here rather than imported: the move phase must be
deterministic under a seed, break gain ties toward the lowest community
id, and assert that modularity never decreases, none of which off-the-shelf
implementations guarantee.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from synmine.errors import ConfigError, DomainError, InputError
from synmine.ingest import ValueMultiset
from synmine.similarity import EmbeddingProvider, PairScorer, SimilarityConfig
from synmine.wordpieces import WordPieceTable

DEFAULT_PRUNE_FRACTION = 0.40
DEFAULT_RESOLUTION = 1.0
DEFAULT_LEXICON_WEIGHT = 1.0
DEFAULT_MAX_VALUES_PER_PROPERTY = 20_000
BRUTE_FORCE_LIMIT = 10

# Virtual node names start with the boundary sentinel, which cannot begin
# a canonicalized value that survived ingestion alongside real synonyms.
_VIRTUAL_PREFIX = "⟂lexicon:"

# Gains this close to a candidate's are treated as ties (lowest id wins).
_GAIN_EPS = 1e-12


class NodeKind(str, Enum):
    VALUE = "value"
    LEXICON_VIRTUAL = "lexicon_virtual"


@dataclass(frozen=True)
class GraphNode:
    name: str
    freq: int
    kind: NodeKind = NodeKind.VALUE


@dataclass
class SimilarityGraph:
    """Weighted undirected graph over one property's values.

    Edges are stored once per unordered pair as (u, v, weight) with u < v
    lexicographically and weight > 0; zero-similarity pairs are absent.
    """

    property: str
    nodes: list[GraphNode] = field(default_factory=list)
    edges: list[tuple[str, str, float]] = field(default_factory=list)

    def node_names(self) -> set[str]:
        return {n.name for n in self.nodes}

    def value_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.kind is NodeKind.VALUE]


@dataclass(frozen=True)
class Synset:
    """One cluster of synonymous expressions under a single property."""

    property: str
    members: tuple[tuple[str, int], ...]
    origin: str
    synset_id: str


def make_synset(property: str, members: Iterable[tuple[str, int]], origin: str = "mined") -> Synset:
    """Build a synset with canonical member order and a content-hash id.

    The id hashes the property and the sorted members, so the same cluster
    gets the same id on every run regardless of discovery order.
    """
    ordered = tuple(sorted(members, key=lambda m: (-m[1], m[0])))
    if not ordered:
        raise DomainError("a synset needs at least one member")
    seen = {value for value, _ in ordered}
    if len(seen) != len(ordered):
        raise DomainError(f"duplicate value inside one synset for property {property!r}")
    digest = hashlib.sha256(
        json.dumps([property, [[v, f] for v, f in ordered]], ensure_ascii=False).encode("utf-8")
    ).hexdigest()
    return Synset(property=property, members=ordered, origin=origin, synset_id=digest[:12])


def build_graph(
    property: str,
    values: ValueMultiset,
    config: SimilarityConfig,
    tables: Mapping[str, WordPieceTable],
    providers: Mapping[str, EmbeddingProvider],
    max_values: int = DEFAULT_MAX_VALUES_PER_PROPERTY,
) -> SimilarityGraph:
    """All-pairs similarity graph for one property.

    Nodes are ordered by (frequency desc, value); when the property has
    more distinct values than max_values, only the most frequent ones are
    kept, since the pair sweep is quadratic.
    """
    if max_values < 1:
        raise ConfigError(f"max_values must be >= 1, got {max_values}")
    if property not in tables:
        raise DomainError(f"no word-piece table for property {property!r}")
    ranked = values.items_by_frequency()[:max_values]
    if not ranked:
        raise DomainError(f"property {property!r} has no values to cluster")
    nodes = [GraphNode(name=v, freq=f) for v, f in ranked]
    scorer = PairScorer(tables[property], config, providers)
    edges: list[tuple[str, str, float]] = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            weight = scorer.score(nodes[i].name, nodes[j].name)
            if weight > 0.0:
                u, v = sorted((nodes[i].name, nodes[j].name))
                edges.append((u, v, weight))
    edges.sort(key=lambda e: (e[0], e[1]))
    return SimilarityGraph(property=property, nodes=nodes, edges=edges)


def prune_edges(graph: SimilarityGraph, q: float = DEFAULT_PRUNE_FRACTION) -> SimilarityGraph:
    """Drop the ceil(q * |E|) lowest-weight edges; ties resolved by (weight, u, v)."""
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"prune fraction must be in [0, 1], got {q}")
    drop = math.ceil(q * len(graph.edges))
    if drop == 0:
        return replace(graph, nodes=list(graph.nodes), edges=list(graph.edges))
    doomed = sorted(graph.edges, key=lambda e: (e[2], e[0], e[1]))[:drop]
    doomed_set = set(doomed)
    kept = [e for e in graph.edges if e not in doomed_set]
    return replace(graph, nodes=list(graph.nodes), edges=kept)


def inject_lexicon(
    graph: SimilarityGraph,
    lexicon: Sequence[Sequence[str]],
    weight: float = DEFAULT_LEXICON_WEIGHT,
) -> SimilarityGraph:
    """Pin known synonym groups together through virtual hub nodes.

    Each lexicon group with at least two members present in the graph gets
    one virtual node tied to every matched member at the given weight (1.0
    by default, the maximum similarity).  Virtual nodes never appear in
    synset output.
    """
    if not 0.0 < weight <= 1.0:
        raise ConfigError(f"lexicon weight must be in (0, 1], got {weight}")
    names = graph.node_names()
    nodes = list(graph.nodes)
    edges = list(graph.edges)
    hub_index = 0
    for group in lexicon:
        present = sorted({m for m in group if m in names})
        if len(present) < 2:
            continue
        hub = f"{_VIRTUAL_PREFIX}{hub_index}"
        while hub in names:
            hub += "'"
        hub_index += 1
        names.add(hub)
        nodes.append(GraphNode(name=hub, freq=0, kind=NodeKind.LEXICON_VIRTUAL))
        for member in present:
            u, v = sorted((hub, member))
            edges.append((u, v, weight))
    edges.sort(key=lambda e: (e[0], e[1]))
    return replace(graph, nodes=nodes, edges=edges)


def load_lexicon(path: str) -> list[list[str]]:
    """Read synonym groups from JSONL, one {"members": [...]} object per line."""
    groups: list[list[str]] = []
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    members = record["members"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise InputError(f"lexicon {path}: bad group at line {lineno}") from exc
                if not isinstance(members, list) or not all(isinstance(m, str) for m in members):
                    raise InputError(f"lexicon {path}: members at line {lineno} must be strings")
                groups.append(members)
    except OSError as exc:
        raise InputError(f"cannot read lexicon {path}: {exc}") from exc
    return groups


def modularity(
    graph: SimilarityGraph,
    communities: Iterable[Iterable[str]],
    resolution: float = DEFAULT_RESOLUTION,
) -> float:
    """Weighted modularity of a partition of the graph's nodes.

    An edgeless graph scores 0 under every partition.  The partition must
    cover each node exactly once.
    """
    community_of: dict[str, int] = {}
    for idx, group in enumerate(communities):
        for name in group:
            if name in community_of:
                raise DomainError(f"node {name!r} assigned to two communities")
            community_of[name] = idx
    names = graph.node_names()
    if set(community_of) != names:
        raise DomainError("partition does not cover the graph's nodes exactly")
    m = sum(w for _, _, w in graph.edges)
    if m == 0.0:
        return 0.0
    degree: dict[str, float] = defaultdict(float)
    intra: dict[int, float] = defaultdict(float)
    total: dict[int, float] = defaultdict(float)
    for u, v, w in graph.edges:
        degree[u] += w
        degree[v] += w
        if community_of[u] == community_of[v]:
            intra[community_of[u]] += w
    for name in names:
        total[community_of[name]] += degree[name]
    score = 0.0
    for c in total:
        score += intra.get(c, 0.0) / m - resolution * (total[c] / (2.0 * m)) ** 2
    return score


def _one_level(
    nodes: list,
    adjacency: dict,
    selfloops: dict,
    m: float,
    resolution: float,
    rng: random.Random,
) -> tuple[dict, bool]:
    """One Louvain move phase; returns (node -> community id, any move made).

    Community ids start as each node's index in sorted order; a node moves
    only for a strictly positive gain over re-joining its current
    community, with ties between candidates going to the lowest id.
    """
    ordered = sorted(nodes)
    community = {node: idx for idx, node in enumerate(ordered)}
    degree = {
        node: sum(adjacency[node].values()) + 2.0 * selfloops.get(node, 0.0) for node in nodes
    }
    sigma_tot = defaultdict(float)
    for node in nodes:
        sigma_tot[community[node]] += degree[node]
    visit_order = list(ordered)
    moved_any = False
    while True:
        moves = 0
        rng.shuffle(visit_order)
        for node in visit_order:
            home = community[node]
            k_i = degree[node]
            links: dict[int, float] = defaultdict(float)
            for neighbor, w in adjacency[node].items():
                links[community[neighbor]] += w
            sigma_tot[home] -= k_i

            def gain(c: int) -> float:
                return links.get(c, 0.0) / m - resolution * sigma_tot[c] * k_i / (2.0 * m * m)

            best_comm = home
            best_gain = gain(home)
            for c in sorted(links):
                if c == home:
                    continue
                g = gain(c)
                if g > best_gain + _GAIN_EPS:
                    best_comm, best_gain = c, g
            sigma_tot[best_comm] += k_i
            community[node] = best_comm
            if best_comm != home:
                moves += 1
        if moves == 0:
            break
        moved_any = True
    return community, moved_any


def _aggregate(
    community: dict, adjacency: dict, selfloops: dict
) -> tuple[list, dict, dict, dict]:
    """Collapse communities into supernodes, keeping intra weight as self-loops."""
    labels = sorted(set(community.values()))
    relabel = {old: new for new, old in enumerate(labels)}
    new_nodes = list(range(len(labels)))
    new_adj: dict = {node: defaultdict(float) for node in new_nodes}
    new_self: dict = defaultdict(float)
    for node, loop in selfloops.items():
        new_self[relabel[community[node]]] += loop
    seen_pairs = set()
    for u in adjacency:
        for v, w in adjacency[u].items():
            if (v, u) in seen_pairs:
                continue
            seen_pairs.add((u, v))
            cu, cv = relabel[community[u]], relabel[community[v]]
            if cu == cv:
                new_self[cu] += w
            else:
                new_adj[cu][cv] += w
                new_adj[cv][cu] += w
    membership = {node: relabel[c] for node, c in community.items()}
    return new_nodes, {n: dict(new_adj[n]) for n in new_nodes}, dict(new_self), membership


def louvain(
    graph: SimilarityGraph,
    seed: int = 0,
    resolution: float = DEFAULT_RESOLUTION,
) -> list[Synset]:
    """Cluster the graph into synsets by seeded two-phase Louvain.

    The seed drives only the node visiting order; everything else is
    deterministic, so a fixed (graph, seed, resolution) always yields the
    same partition.  Virtual lexicon nodes steer the clustering but are
    stripped from the returned synsets.
    """
    if resolution <= 0.0:
        raise ConfigError(f"resolution must be > 0, got {resolution}")
    if not graph.nodes:
        raise DomainError("cannot cluster an empty graph")
    freq_of = {n.name: n.freq for n in graph.nodes}
    kind_of = {n.name: n.kind for n in graph.nodes}

    nodes: list = [n.name for n in graph.nodes]
    adjacency: dict = {name: defaultdict(float) for name in nodes}
    for u, v, w in graph.edges:
        if w <= 0.0:
            raise DomainError(f"non-positive edge weight on ({u!r}, {v!r})")
        adjacency[u][v] += w
        adjacency[v][u] += w
    adjacency = {n: dict(adjacency[n]) for n in nodes}
    selfloops: dict = {}
    m = sum(w for _, _, w in graph.edges)

    assignment = {name: name for name in nodes}
    rng = random.Random(seed)

    if m > 0.0:
        previous_q = None
        while True:
            community, moved = _one_level(nodes, adjacency, selfloops, m, resolution, rng)
            grouped: dict = defaultdict(list)
            for name in assignment:
                grouped[community[assignment[name]]].append(name)
            q = modularity(graph, grouped.values(), resolution)
            if previous_q is not None:
                # the move phase only accepts strictly positive gains, so a
                # drop here means the implementation is wrong, not the data
                assert q >= previous_q - 1e-9, "modularity decreased across a level"
            previous_q = q
            if not moved:
                break
            nodes, adjacency, selfloops, membership = _aggregate(community, adjacency, selfloops)
            assignment = {name: membership[assignment[name]] for name in assignment}
            if len(nodes) == 1:
                break

    final: dict = defaultdict(list)
    for name, label in assignment.items():
        final[label].append(name)
    synsets = []
    for label in final:
        members = [
            (name, freq_of[name]) for name in final[label] if kind_of[name] is NodeKind.VALUE
        ]
        if members:
            synsets.append(make_synset(graph.property, members, origin="mined"))
    synsets.sort(key=lambda s: tuple(s.members))
    return synsets


def _partitions(n: int):
    """All set partitions of range(n) as restricted-growth strings, ascending."""
    code = [0] * n
    while True:
        yield list(code)
        # odometer increment under the growth constraint code[i] <= max(code[:i]) + 1
        i = n - 1
        while i > 0:
            limit = max(code[:i]) + 1
            if code[i] < limit:
                code[i] += 1
                for j in range(i + 1, n):
                    code[j] = 0
                break
            i -= 1
        else:
            return


def brute_force_partition(graph: SimilarityGraph, resolution: float = DEFAULT_RESOLUTION) -> list[list[str]]:
    """Exhaustive maximum-modularity partition, for oracle use only.

    Walks every set partition of the nodes (hence the hard size limit),
    returning the best one; exact ties go to the lexicographically
    smallest growth-string encoding, which the ascending enumeration
    yields for free.
    """
    names = sorted(graph.node_names())
    n = len(names)
    if n == 0:
        raise DomainError("cannot partition an empty graph")
    if n > BRUTE_FORCE_LIMIT:
        raise DomainError(
            f"brute-force partition limited to {BRUTE_FORCE_LIMIT} nodes, got {n}"
        )
    best_code = None
    best_q = -math.inf
    for code in _partitions(n):
        groups = defaultdict(list)
        for idx, block in enumerate(code):
            groups[block].append(names[idx])
        q = modularity(graph, groups.values(), resolution)
        if q > best_q + 1e-12:
            best_q = q
            best_code = code
    groups = defaultdict(list)
    for idx, block in enumerate(best_code):
        groups[block].append(names[idx])
    return [groups[block] for block in sorted(groups)]
