"""Augmentation engine: pick and execute one of three recommendation boosts.

Given a cold user's keyword set the engine gathers three signals (related
terms, class probability scores, nearest-neighbor users of the top class) and
then applies the decision rule: when the top class probability clears the
alpha threshold and near neighbors exist, items come from those neighbors'
search behavior; when it clears the threshold but no neighbor is close
enough, the augmented query runs scoped to the top class; otherwise the
augmented query runs unscoped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .index import SearchIndex, search
from .ingest import UserProfile, normalize_term
from .model import (
    ClassificationScores,
    ClassTermModel,
    NoKnownKeywordsError,
    ScoredRelation,
)
from .filtering import filter_related

if TYPE_CHECKING:
    from .config import EngineConfig

logger = logging.getLogger(__name__)

METRIC_CODES = {
    "jaccard": kernels.METRIC_JACCARD,
    "hamming": kernels.METRIC_HAMMING,
    "euclidean": kernels.METRIC_EUCLIDEAN,
}


class Strategy(str, Enum):
    NEAREST_NEIGHBOR = "NearestNeighbor"
    CLASS_SCOPED_QUERY = "ClassScopedQuery"
    QUERY_ONLY = "QueryOnly"


@dataclass(frozen=True)
class AugmentationConfig:
    alpha: float = 0.5
    distance_metric: str = "jaccard"
    neighbor_distance_threshold: float = 0.5
    max_neighbors_k: int = 5
    related_top_n: int = 10
    smoothing_beta: float = 1.0
    related_min_score: float = 0.2
    expansion_weight: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.distance_metric not in METRIC_CODES:
            raise ValueError(f"unknown distance metric: {self.distance_metric!r}")
        if self.neighbor_distance_threshold < 0:
            raise ValueError("neighbor_distance_threshold must be >= 0")
        if self.max_neighbors_k < 1:
            raise ValueError("max_neighbors_k must be >= 1")
        if self.related_top_n < 1:
            raise ValueError("related_top_n must be >= 1")
        if self.smoothing_beta < 0:
            raise ValueError("smoothing_beta must be >= 0")
        if not 0.0 <= self.related_min_score <= 1.0:
            raise ValueError("related_min_score must be in [0, 1]")
        if not 0.0 < self.expansion_weight <= 1.0:
            raise ValueError("expansion_weight must be in (0, 1]")


@dataclass(frozen=True)
class NeighborSet:
    """Users of ``class_scope`` within the distance threshold, nearest first."""

    neighbors: tuple[tuple[str, float], ...]
    class_scope: str | None

    def __bool__(self) -> bool:
        return bool(self.neighbors)


EMPTY_NEIGHBORS = NeighborSet(neighbors=(), class_scope=None)


@dataclass(frozen=True)
class AugmentedQuery:
    """Disjunctive query: originals at weight 1 plus weighted expansions."""

    original_terms: tuple[str, ...]
    expansion_terms: tuple[tuple[str, float], ...]
    class_filter: str | None = None


@dataclass(frozen=True)
class AugmentationDecision:
    strategy: Strategy
    scores: ClassificationScores | None
    c_max: str | None
    neighbors: NeighborSet | None
    query: AugmentedQuery


@dataclass(frozen=True)
class RecommendedItem:
    doc_id: str
    score: float
    provenance: tuple[str, ...]


@dataclass(frozen=True)
class Recommendations:
    items: tuple[RecommendedItem, ...]


# -- distances and neighbors ---------------------------------------------------


def user_distance(
    a: Iterable[str],
    b: Iterable[str],
    metric: str = "jaccard",
    vocabulary: Iterable[str] | None = None,
) -> float:
    """Distance between two users' term sets.

    jaccard = 1 - |a∩b| / |a∪b| (0 when both empty); hamming and euclidean
    treat the sets as indicator vectors over ``vocabulary`` and reduce to the
    symmetric difference size (and its square root).
    """
    if metric not in METRIC_CODES:
        raise ValueError(f"unknown distance metric: {metric!r}")
    set_a, set_b = set(a), set(b)
    if metric == "jaccard":
        union = len(set_a | set_b)
        if union == 0:
            return 0.0
        return 1.0 - len(set_a & set_b) / union
    if vocabulary is None:
        raise ValueError(f"{metric} distance requires a vocabulary")
    vocab = set(vocabulary)
    for term in set_a | set_b:
        if term not in vocab:
            raise ValueError(f"term not in vocabulary: {term!r}")
    sym = len(set_a ^ set_b)
    return float(sym) if metric == "hamming" else float(np.sqrt(sym))


def nearest_neighbors(
    profiles: Sequence[UserProfile],
    keywords: Iterable[str],
    c_max: str,
    config: AugmentationConfig,
) -> NeighborSet:
    """Profiles of class ``c_max`` within the distance threshold of the keywords.

    Sorted ascending by (distance, user_id) and truncated to max_neighbors_k.
    """
    kw = set(keywords)
    candidates = [p for p in profiles if p.classification == c_max]
    if not candidates:
        return NeighborSet(neighbors=(), class_scope=c_max)

    vocab: set[str] = set(kw)
    for profile in candidates:
        vocab.update(profile.terms)
    term_id = {t: i for i, t in enumerate(sorted(vocab))}

    query_ids = np.array(sorted(term_id[t] for t in kw), dtype=np.int64)
    ptr = np.zeros(len(candidates) + 1, dtype=np.int64)
    rows = []
    for i, profile in enumerate(candidates):
        ids = sorted(term_id[t] for t in profile.terms)
        rows.extend(ids)
        ptr[i + 1] = ptr[i] + len(ids)
    prof_ids = np.array(rows, dtype=np.int64)

    dist = kernels.set_distances(ptr, prof_ids, query_ids, METRIC_CODES[config.distance_metric])
    eligible = [
        (float(d), p.user_id)
        for p, d in zip(candidates, dist)
        if d <= config.neighbor_distance_threshold
    ]
    eligible.sort()
    kept = eligible[: config.max_neighbors_k]
    return NeighborSet(
        neighbors=tuple((user_id, d) for d, user_id in kept),
        class_scope=c_max,
    )


# -- query building ------------------------------------------------------------


def build_augmented_query(
    keywords: Sequence[str],
    related: Sequence[ScoredRelation],
    class_filter: str | None = None,
    expansion_weight: float = 0.5,
) -> AugmentedQuery:
    """Attach weighted expansion terms to the user's keywords.

    Expansion weights are the relation scores rescaled so the best expansion
    carries exactly ``expansion_weight``; terms already in the keywords are
    dropped. Originals implicitly carry weight 1.
    """
    originals: list[str] = []
    for kw in keywords:
        if kw not in originals:
            originals.append(kw)
    original_set = set(originals)

    best: dict[str, float] = {}
    for relation in related:
        if relation.target in original_set:
            continue
        if relation.score > best.get(relation.target, 0.0):
            best[relation.target] = relation.score
    expansions: tuple[tuple[str, float], ...] = ()
    if best:
        top = max(best.values())
        expansions = tuple(
            sorted(
                ((t, expansion_weight * s / top) for t, s in best.items()),
                key=lambda pair: (-pair[1], pair[0]),
            )
        )
    return AugmentedQuery(
        original_terms=tuple(originals),
        expansion_terms=expansions,
        class_filter=class_filter,
    )


# -- the decision rule -----------------------------------------------------------


def decide(
    scores: ClassificationScores | None,
    neighbors: NeighborSet | None,
    alpha: float,
) -> Strategy:
    """Three-way strategy choice.

    Top class probability above alpha with near neighbors present selects
    NearestNeighbor; above alpha with none selects ClassScopedQuery; anything
    else (including no scores at all) degrades to QueryOnly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if scores is not None and max(scores.scores.values()) > alpha:
        if neighbors is not None and neighbors.neighbors:
            return Strategy.NEAREST_NEIGHBOR
        return Strategy.CLASS_SCOPED_QUERY
    return Strategy.QUERY_ONLY


# -- execution -------------------------------------------------------------------


def _accumulate(
    acc: dict[str, tuple[float, list[str]]],
    doc_id: str,
    score: float,
    provenance: str,
) -> None:
    prev = acc.get(doc_id)
    if prev is None:
        acc[doc_id] = (score, [provenance])
    else:
        tags = prev[1]
        if provenance not in tags:
            tags.append(provenance)
        acc[doc_id] = (prev[0] + score, tags)


def execute_augmented_query(
    index: SearchIndex,
    query: AugmentedQuery,
    mode: str = "phrase",
    limit: int = 20,
) -> Recommendations:
    """Run the disjunctive weighted query; doc score = sum of weight * tf-idf."""
    acc: dict[str, tuple[float, list[str]]] = {}
    unbounded = max(1, index.doc_count)
    for term in query.original_terms:
        result = search(index, term, mode=mode, class_filter=query.class_filter, limit=unbounded)
        for doc_id, score in result.hits:
            _accumulate(acc, doc_id, score, f"term:{term}")
    for term, weight in query.expansion_terms:
        result = search(index, term, mode=mode, class_filter=query.class_filter, limit=unbounded)
        for doc_id, score in result.hits:
            _accumulate(acc, doc_id, weight * score, f"expansion:{term}")
    return _rank(acc, limit)


def _rank(acc: dict[str, tuple[float, list[str]]], limit: int) -> Recommendations:
    ordered = sorted(acc.items(), key=lambda kv: (-kv[1][0], kv[0]))
    items = tuple(
        RecommendedItem(doc_id=doc_id, score=score, provenance=tuple(tags))
        for doc_id, (score, tags) in ordered[:limit]
    )
    return Recommendations(items=items)


def _neighbor_items(
    index: SearchIndex,
    neighbors: NeighborSet,
    profiles_by_id: Mapping[str, UserProfile],
    threshold: float,
    mode: str,
    limit: int,
) -> Recommendations:
    """Items from neighbors' own search terms, scoped to the neighbor class.

    Each neighbor contributes their term hits weighted by proximity:
    1 - distance/threshold (1.0 everywhere when the threshold is 0).
    """
    acc: dict[str, tuple[float, list[str]]] = {}
    unbounded = max(1, index.doc_count)
    for user_id, distance in neighbors.neighbors:
        normalized = distance / threshold if threshold > 0 else 0.0
        weight = 1.0 - normalized
        profile = profiles_by_id[user_id]
        for term in profile.terms:
            result = search(
                index,
                term,
                mode=mode,
                class_filter=neighbors.class_scope,
                limit=unbounded,
            )
            for doc_id, score in result.hits:
                _accumulate(acc, doc_id, weight * score, f"neighbor:{user_id}")
    return _rank(acc, limit)


# -- orchestration -----------------------------------------------------------------


def recommend(
    model: ClassTermModel,
    profiles: Sequence[UserProfile],
    index: SearchIndex,
    keywords: Sequence[str],
    config: "EngineConfig",
) -> tuple[AugmentationDecision, Recommendations]:
    """Full pipeline for one keyword set: signals, decision, execution.

    Cold inputs never error: unknown keywords simply yield no classification
    scores, which forces the QueryOnly branch on the raw keywords.
    """
    normalized: list[str] = []
    for raw in keywords:
        term = normalize_term(raw)
        if term is not None and term not in normalized:
            normalized.append(term)
    if not normalized:
        raise ValueError("no usable keywords")
    aug = config.augmentation

    scores: ClassificationScores | None
    try:
        scores = model.classify_keywords(normalized, beta=aug.smoothing_beta)
    except NoKnownKeywordsError:
        scores = None
    c_max = scores.argmax_class() if scores is not None else None

    merged: dict[str, ScoredRelation] = {}
    original_set = set(normalized)
    for term in normalized:
        if not model.has_term(term):
            continue
        candidates = model.related_candidates(
            term, top_n=aug.related_top_n, min_score=aug.related_min_score
        )
        outcome = filter_related(
            index,
            candidates,
            policy=config.filter_policy,
            mode=config.search_mode,
            depth=config.filter_depth,
        )
        for relation in outcome.kept:
            if relation.target in original_set:
                continue
            prev = merged.get(relation.target)
            if prev is None or relation.score > prev.score:
                merged[relation.target] = relation
    related = sorted(merged.values(), key=lambda r: (-r.score, r.target))

    if scores is not None and c_max is not None:
        neighbors = nearest_neighbors(profiles, normalized, c_max, aug)
    else:
        neighbors = EMPTY_NEIGHBORS

    strategy = decide(scores, neighbors, aug.alpha)
    class_filter = c_max if strategy is not Strategy.QUERY_ONLY else None
    query = build_augmented_query(
        normalized, related, class_filter=class_filter, expansion_weight=aug.expansion_weight
    )
    decision = AugmentationDecision(
        strategy=strategy,
        scores=scores,
        c_max=c_max,
        neighbors=neighbors if scores is not None else None,
        query=query,
    )
    logger.debug("strategy %s for keywords %s", strategy.value, normalized)

    if strategy is Strategy.NEAREST_NEIGHBOR:
        profiles_by_id = {p.user_id: p for p in profiles}
        recommendations = _neighbor_items(
            index,
            neighbors,
            profiles_by_id,
            aug.neighbor_distance_threshold,
            config.search_mode,
            config.result_limit,
        )
    else:
        recommendations = execute_augmented_query(
            index, query, mode=config.search_mode, limit=config.result_limit
        )
    return decision, recommendations


def decision_to_dict(decision: AugmentationDecision, alpha: float) -> dict:
    """Decision trace with fixed field names (stable wire format)."""
    if decision.neighbors is None:
        neighbor_rows = []
    else:
        neighbor_rows = [
            {"user_id": user_id, "distance": distance}
            for user_id, distance in decision.neighbors.neighbors
        ]
    return {
        "strategy": decision.strategy.value,
        "alpha": alpha,
        "scores": dict(sorted(decision.scores.scores.items())) if decision.scores else None,
        "c_max": decision.c_max,
        "neighbors": neighbor_rows,
        "query": {
            "original": list(decision.query.original_terms),
            "expansions": [[t, w] for t, w in decision.query.expansion_terms],
            "class_filter": decision.query.class_filter,
        },
    }
