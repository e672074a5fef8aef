"""searchkin: mine search logs for related terms, augment cold-start recommendations."""

from .augment import (
    AugmentationConfig,
    AugmentationDecision,
    AugmentedQuery,
    NeighborSet,
    Recommendations,
    RecommendedItem,
    Strategy,
    build_augmented_query,
    decide,
    decision_to_dict,
    nearest_neighbors,
    recommend,
    user_distance,
)
from .config import EngineConfig, config_from_dict, config_to_dict, default_config, load_config
from .filtering import (
    FilterOutcome,
    FilterPolicy,
    OverlapStats,
    filter_related,
    measure_overlap,
    write_filter_report,
)
from .index import (
    Document,
    DuplicateDocumentError,
    QueryResult,
    SearchIndex,
    index_documents,
    load_corpus,
    result_doc_set,
    search,
    tokenize,
)
from .ingest import (
    ExtractionConfig,
    IngestReport,
    ParseAbort,
    SearchLogRecord,
    UserProfile,
    aggregate_user_profiles,
    extract_terms,
    normalize_term,
    parse_log_records,
)
from .model import (
    COUNTING_DISTINCT_USERS,
    COUNTING_SEARCH_EVENTS,
    ClassificationScores,
    ClassTermModel,
    ModelError,
    NoKnownKeywordsError,
    RelatedTermSet,
    ScoredRelation,
    UnknownTermError,
    build_model,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .snapshot import EngineSnapshot, build_snapshot, load_snapshot

__version__ = "0.1.0"

__all__ = [
    "AugmentationConfig",
    "AugmentationDecision",
    "AugmentedQuery",
    "COUNTING_DISTINCT_USERS",
    "COUNTING_SEARCH_EVENTS",
    "ClassTermModel",
    "ClassificationScores",
    "Document",
    "DuplicateDocumentError",
    "EngineConfig",
    "EngineSnapshot",
    "ExtractionConfig",
    "FilterOutcome",
    "FilterPolicy",
    "IngestReport",
    "ModelError",
    "NeighborSet",
    "NoKnownKeywordsError",
    "OverlapStats",
    "ParseAbort",
    "QueryResult",
    "Recommendations",
    "RecommendedItem",
    "RelatedTermSet",
    "ScoredRelation",
    "SearchIndex",
    "SearchLogRecord",
    "Strategy",
    "UnknownTermError",
    "UserProfile",
    "aggregate_user_profiles",
    "build_augmented_query",
    "build_model",
    "build_snapshot",
    "config_from_dict",
    "config_to_dict",
    "decide",
    "decision_to_dict",
    "default_config",
    "extract_terms",
    "filter_related",
    "index_documents",
    "load_config",
    "load_corpus",
    "load_model",
    "load_snapshot",
    "measure_overlap",
    "model_from_dict",
    "model_to_dict",
    "nearest_neighbors",
    "normalize_term",
    "parse_log_records",
    "recommend",
    "result_doc_set",
    "save_model",
    "search",
    "tokenize",
    "user_distance",
    "write_filter_report",
]
