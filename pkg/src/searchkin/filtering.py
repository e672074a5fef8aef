"""Retrieval-overlap validation of candidate term relationships.

A relationship survives only if querying the source term and the target term
returns document sets that genuinely intersect: an absolute intersection floor
guards tiny result sets, a Jaccard floor guards asymmetric ones. Overlap is
measured over the top-``depth`` ranked documents so cost stays bounded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO

from .index import SearchIndex, result_doc_set
from .model import RelatedTermSet, ScoredRelation


@dataclass(frozen=True)
class OverlapStats:
    set_a_size: int
    set_b_size: int
    intersection_size: int
    jaccard: float


@dataclass(frozen=True)
class FilterPolicy:
    min_intersection: int = 3
    min_jaccard: float = 0.05

    def __post_init__(self):
        if self.min_intersection < 0:
            raise ValueError("min_intersection must be >= 0")
        if self.min_jaccard < 0:
            raise ValueError("min_jaccard must be >= 0")

    def keeps(self, stats: OverlapStats) -> bool:
        return (
            stats.intersection_size >= self.min_intersection
            and stats.jaccard >= self.min_jaccard
        )


@dataclass(frozen=True)
class FilterOutcome:
    """Partition of the candidates: kept (input score order) and removed.

    ``kept_stats`` carries the overlap measurements aligned with ``kept`` so
    reports can show why survivors survived.
    """

    source: str
    kept: tuple[ScoredRelation, ...]
    removed: tuple[tuple[ScoredRelation, OverlapStats], ...]
    kept_stats: tuple[OverlapStats, ...]


def overlap_from_sets(set_a: set[str], set_b: set[str]) -> OverlapStats:
    inter = len(set_a & set_b)
    union = len(set_a | set_b)
    return OverlapStats(
        set_a_size=len(set_a),
        set_b_size=len(set_b),
        intersection_size=inter,
        jaccard=0.0 if union == 0 else inter / union,
    )


def measure_overlap(
    index: SearchIndex,
    a: str,
    b: str,
    mode: str = "phrase",
    depth: int = 100,
) -> OverlapStats:
    """Overlap of the top-``depth`` result sets of terms ``a`` and ``b``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    docs_a = result_doc_set(index, a, mode=mode, depth=depth)
    docs_b = result_doc_set(index, b, mode=mode, depth=depth)
    return overlap_from_sets(docs_a, docs_b)


def filter_related(
    index: SearchIndex,
    candidates: RelatedTermSet,
    policy: FilterPolicy | None = None,
    mode: str = "phrase",
    depth: int = 100,
) -> FilterOutcome:
    """Partition candidate relations into kept and removed by retrieval overlap.

    A candidate is kept iff intersection_size >= min_intersection and
    jaccard >= min_jaccard. The source's result set is retrieved once.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    policy = policy or FilterPolicy()
    source_docs = result_doc_set(index, candidates.source, mode=mode, depth=depth)

    kept: list[ScoredRelation] = []
    kept_stats: list[OverlapStats] = []
    removed: list[tuple[ScoredRelation, OverlapStats]] = []
    for relation in candidates.relations:
        target_docs = result_doc_set(index, relation.target, mode=mode, depth=depth)
        stats = overlap_from_sets(source_docs, target_docs)
        if policy.keeps(stats):
            kept.append(relation)
            kept_stats.append(stats)
        else:
            removed.append((relation, stats))
    return FilterOutcome(
        source=candidates.source,
        kept=tuple(kept),
        removed=tuple(removed),
        kept_stats=tuple(kept_stats),
    )


def write_filter_report(outcome: FilterOutcome, fp: IO[str]) -> None:
    """JSONL report, one line per candidate in original order."""
    by_target: dict[str, tuple[ScoredRelation, OverlapStats, bool]] = {}
    for relation, stats in zip(outcome.kept, outcome.kept_stats):
        by_target[relation.target] = (relation, stats, True)
    for relation, stats in outcome.removed:
        by_target[relation.target] = (relation, stats, False)
    ordered = sorted(
        by_target.values(), key=lambda row: (-row[0].score, row[0].target)
    )
    for relation, stats, was_kept in ordered:
        fp.write(
            json.dumps(
                {
                    "source": relation.source,
                    "target": relation.target,
                    "score": relation.score,
                    "intersection": stats.intersection_size,
                    "jaccard": stats.jaccard,
                    "kept": was_kept,
                },
                sort_keys=True,
            )
        )
        fp.write("\n")
