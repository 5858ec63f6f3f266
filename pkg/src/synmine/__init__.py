"""Synonym-set mining and expansion over open knowledge-graph dumps.

The toolkit ingests property-value triples, picks out the properties whose
values behave like category labels, clusters each property's values into
synonym sets by combined textual and embedding similarity, and grows those
sets by swapping core word-pieces between members.  See the README for the
pipeline walkthrough and file formats.
"""

from synmine.clustering import (
    GraphNode,
    NodeKind,
    SimilarityGraph,
    Synset,
    brute_force_partition,
    build_graph,
    inject_lexicon,
    load_lexicon,
    louvain,
    make_synset,
    modularity,
    prune_edges,
)
from synmine.errors import (
    ConfigError,
    DegenerateEmbeddingError,
    DomainError,
    InputError,
    PipelineError,
    SynmineError,
    TransportError,
)
from synmine.evaluation import (
    GoldLabeling,
    MiningReport,
    SynsetStats,
    load_gold,
    pooled_rand_indices,
    rand_index,
    synset_stats,
)
from synmine.expansion import (
    ExpandedExpression,
    PCSEntry,
    core_parts,
    expand_synset,
    pcs_score,
)
from synmine.ingest import (
    ObjectKind,
    ParseStats,
    PropertyIndex,
    Triple,
    ValueMultiset,
    build_property_index,
    parse_triples,
    parse_triples_path,
)
from synmine.pipeline import PipelineConfig, read_synsets, run_pipeline, write_synsets
from synmine.selection import (
    PropertyScore,
    pcp_score,
    rank_scores,
    score_properties,
    select_properties,
    shannon_entropy,
    wordpiece_distribution,
)
from synmine.similarity import (
    CachingProvider,
    EmbeddingCache,
    EmbeddingProvider,
    HashingEmbeddingProvider,
    HttpEmbeddingProvider,
    PairScorer,
    SimilarityConfig,
    drs,
    embed_value,
    semantic_similarity,
    textual_similarity,
    weighted_jaccard,
)
from synmine.wordpieces import (
    BOUNDARY_CHAR,
    WordPieceTable,
    build_table,
    lr_entropy,
    min_split_pmi,
    pmi,
)

__version__ = "0.1.0"
