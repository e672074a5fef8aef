"""Two-level class/term frequency model over aggregated search behavior.

Root level holds user classifications, leaf level holds search terms; an edge
(c, k) carries the count of how often users of class c searched term k. Every
probability the model exposes is a plain ratio of these counts:

    joint P(k, c)        = f_ck / grand_total
    conditional P(k | c) = f_ck / class_total_c
    conditional P(c | k) = f_ck / term_total_k

Counts come in two modes: "distinct-users" (a user contributes 1 per term they
ever searched, the default) and "search-events" (each search counts).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .ingest import UserProfile

logger = logging.getLogger(__name__)

COUNTING_DISTINCT_USERS = "distinct-users"
COUNTING_SEARCH_EVENTS = "search-events"
_COUNTING_MODES = (COUNTING_DISTINCT_USERS, COUNTING_SEARCH_EVENTS)

MODEL_FORMAT_VERSION = 1


class ModelError(ValueError):
    pass


class NoKnownKeywordsError(ModelError):
    """None of the supplied keywords exist in the model vocabulary."""


class UnknownTermError(ModelError):
    pass


@dataclass(frozen=True)
class ScoredRelation:
    source: str
    target: str
    score: float


@dataclass(frozen=True)
class RelatedTermSet:
    """Related terms for one source, sorted by descending score then target."""

    source: str
    relations: tuple[ScoredRelation, ...]


@dataclass(frozen=True)
class ClassificationScores:
    """Normalized probability per class for a keyword set."""

    scores: Mapping[str, float]
    smoothing_beta: float

    def argmax_class(self) -> str:
        """The maximizing class; ties go to the lexicographically smallest."""
        best = max(self.scores.values())
        return min(c for c, p in self.scores.items() if p == best)


class ClassTermModel:
    """Immutable count model; build via :func:`build_model` or :func:`load_model`.

    Counts are held twice as CSR arrays: term-major (rows = terms, used for
    P(c|k) lookups and classification) and class-major (rows = classes, used
    to sweep a class's terms when scoring relatedness).
    """

    def __init__(
        self,
        classes: Sequence[str],
        terms: Sequence[str],
        edges: Sequence[tuple[int, int, int]],
        counting_mode: str,
    ):
        if counting_mode not in _COUNTING_MODES:
            raise ModelError(f"unknown counting mode: {counting_mode!r}")
        if not edges:
            raise ModelError("empty corpus")
        if list(classes) != sorted(set(classes)):
            raise ModelError("classes must be sorted and unique")
        if list(terms) != sorted(set(terms)):
            raise ModelError("terms must be sorted and unique")

        self.classes: tuple[str, ...] = tuple(classes)
        self.terms: tuple[str, ...] = tuple(terms)
        self.counting_mode = counting_mode
        self.class_index: dict[str, int] = {c: i for i, c in enumerate(self.classes)}
        self.term_index: dict[str, int] = {t: i for i, t in enumerate(self.terms)}

        n_classes, n_terms = len(self.classes), len(self.terms)
        ci = np.array([e[0] for e in edges], dtype=np.int64)
        ti = np.array([e[1] for e in edges], dtype=np.int64)
        cnt = np.array([e[2] for e in edges], dtype=np.int64)
        if np.any(ci < 0) or np.any(ci >= n_classes) or np.any(ti < 0) or np.any(ti >= n_terms):
            raise ModelError("edge index out of range")
        if np.any(cnt <= 0):
            raise ModelError("edge counts must be positive")
        keys = ci * n_terms + ti
        if np.any(np.diff(keys) <= 0):
            raise ModelError("edges must be sorted by (class, term) without duplicates")

        # class-major CSR (edges arrive sorted by class, then term)
        self._cptr = np.zeros(n_classes + 1, dtype=np.int64)
        np.add.at(self._cptr, ci + 1, 1)
        np.cumsum(self._cptr, out=self._cptr)
        self._cterm = ti.copy()
        self._ccnt = cnt.copy()
        self._ccnt_f = self._ccnt.astype(np.float64)

        # term-major mirror
        order = np.lexsort((ci, ti))
        self._tptr = np.zeros(n_terms + 1, dtype=np.int64)
        np.add.at(self._tptr, ti + 1, 1)
        np.cumsum(self._tptr, out=self._tptr)
        self._tcls = ci[order]
        self._tcnt = cnt[order]
        self._tcnt_f = self._tcnt.astype(np.float64)

        self._class_totals = np.zeros(n_classes, dtype=np.int64)
        np.add.at(self._class_totals, ci, cnt)
        self._term_totals = np.zeros(n_terms, dtype=np.int64)
        np.add.at(self._term_totals, ti, cnt)
        self.grand_total = int(cnt.sum())

        sq = np.zeros(n_terms, dtype=np.float64)
        np.add.at(sq, ti, cnt.astype(np.float64) ** 2)
        self._term_norms = np.sqrt(sq)

    # -- introspection -----------------------------------------------------

    @property
    def n_edges(self) -> int:
        return int(self._ccnt.shape[0])

    def has_term(self, term: str) -> bool:
        return term in self.term_index

    def has_class(self, label: str) -> bool:
        return label in self.class_index

    def edge_count(self, label: str, term: str) -> int:
        """f_ck as an exact integer; 0 for absent edges or unknown symbols."""
        ci = self.class_index.get(label)
        ti = self.term_index.get(term)
        if ci is None or ti is None:
            return 0
        lo, hi = self._tptr[ti], self._tptr[ti + 1]
        pos = int(np.searchsorted(self._tcls[lo:hi], ci))
        if pos < hi - lo and self._tcls[lo + pos] == ci:
            return int(self._tcnt[lo + pos])
        return 0

    def class_total(self, label: str) -> int:
        ci = self.class_index.get(label)
        return 0 if ci is None else int(self._class_totals[ci])

    def term_total(self, term: str) -> int:
        ti = self.term_index.get(term)
        return 0 if ti is None else int(self._term_totals[ti])

    # -- probabilities -----------------------------------------------------

    def joint_probability(self, term: str, label: str) -> float:
        """P(k, c) = f_ck / grand_total; 0 for unknown symbols or absent edges."""
        return self.edge_count(label, term) / self.grand_total

    def term_given_class(self, term: str, label: str) -> float:
        """P(k | c) = f_ck / class_total; 0 when the class is unknown."""
        total = self.class_total(label)
        if total == 0:
            return 0.0
        return self.edge_count(label, term) / total

    def class_given_term(self, term: str, label: str) -> float:
        """P(c | k) = f_ck / term_total; 0 when the term is unknown."""
        total = self.term_total(term)
        if total == 0:
            return 0.0
        return self.edge_count(label, term) / total

    # -- classification ----------------------------------------------------

    def classify_keywords(self, keywords: Iterable[str], beta: float = 1.0) -> ClassificationScores:
        """Score every class for a keyword set with a smoothed naive-Bayes product.

        p_c is proportional to P(c) * prod_k (f_ck + beta) / (class_total_c +
        beta * vocab_size) over the known keywords, computed in log space and
        normalized to sum to 1. Keywords outside the vocabulary are ignored;
        if none are known, :class:`NoKnownKeywordsError` is raised. With
        beta = 0 it can happen that no class covers every keyword, leaving
        zero mass everywhere; the scores then fall back to uniform.
        """
        if beta < 0:
            raise ValueError("beta must be >= 0")
        kw = set(keywords)
        if not kw:
            raise ValueError("empty keyword set")
        kw_ids = sorted(self.term_index[k] for k in kw if k in self.term_index)
        if not kw_ids:
            raise NoKnownKeywordsError("no known keywords")

        raw = kernels.class_log_scores(
            self._tptr,
            self._tcls,
            self._tcnt_f,
            np.array(kw_ids, dtype=np.int64),
            self._class_totals.astype(np.float64),
            float(self.grand_total),
            float(beta),
            len(self.terms),
        )
        peak = float(np.max(raw))
        if math.isinf(peak) and peak < 0:
            probs = np.full(len(self.classes), 1.0 / len(self.classes))
        else:
            probs = np.exp(raw - peak)
            probs /= probs.sum()
        scores = {c: float(p) for c, p in zip(self.classes, probs)}
        return ClassificationScores(scores=scores, smoothing_beta=float(beta))

    # -- relatedness ---------------------------------------------------------

    def related_candidates(
        self, source: str, top_n: int = 10, min_score: float = 0.2
    ) -> RelatedTermSet:
        """Terms related to ``source``, scored by cosine of class-profile vectors.

        Each term's profile vector is [P(c|k)] over all classes; only targets
        sharing at least one class with the source can score above zero and
        only those are eligible. Results are the ``top_n`` by descending
        score (ties by target text) with score >= ``min_score``.
        """
        if top_n < 1:
            raise ValueError("top_n must be >= 1")
        if not 0.0 <= min_score <= 1.0:
            raise ValueError("min_score must be in [0, 1]")
        ti = self.term_index.get(source)
        if ti is None:
            raise UnknownTermError(f"unknown term: {source!r}")

        lo, hi = self._tptr[ti], self._tptr[ti + 1]
        scores = kernels.related_scores(
            self._cptr,
            self._cterm,
            self._ccnt_f,
            self._tcls[lo:hi],
            self._tcnt_f[lo:hi],
            self._term_norms,
        )
        scores[ti] = 0.0
        eligible = np.nonzero((scores > 0.0) & (scores >= min_score))[0]
        ordered = sorted(eligible.tolist(), key=lambda i: (-scores[i], self.terms[i]))
        relations = tuple(
            ScoredRelation(source=source, target=self.terms[i], score=min(1.0, float(scores[i])))
            for i in ordered[:top_n]
        )
        return RelatedTermSet(source=source, relations=relations)

    # -- integrity -----------------------------------------------------------

    def check_consistency(self) -> list[str]:
        """Recompute every cached total from the edges; list any discrepancies."""
        problems: list[str] = []
        n_classes, n_terms = len(self.classes), len(self.terms)
        ci = np.repeat(np.arange(n_classes), np.diff(self._cptr))
        class_totals = np.zeros(n_classes, dtype=np.int64)
        np.add.at(class_totals, ci, self._ccnt)
        term_totals = np.zeros(n_terms, dtype=np.int64)
        np.add.at(term_totals, self._cterm, self._ccnt)
        grand = int(self._ccnt.sum())

        if np.any(self._ccnt <= 0):
            problems.append("non-positive edge count stored")
        for c in np.nonzero(class_totals != self._class_totals)[0]:
            problems.append(f"class_totals[{self.classes[c]!r}]")
        for t in np.nonzero(term_totals != self._term_totals)[0]:
            problems.append(f"term_totals[{self.terms[t]!r}]")
        if grand != self.grand_total:
            problems.append("grand_total")
        if grand != int(self._tcnt.sum()):
            problems.append("term-major/class-major edge mismatch")
        return problems


def build_model(
    profiles: Sequence[UserProfile], counting_mode: str = COUNTING_DISTINCT_USERS
) -> ClassTermModel:
    """Count (class, term) edges over the profiles and assemble the model.

    distinct-users: f_ck = number of users of class c whose term set holds k.
    search-events: f_ck = total searches for k by users of class c; requires
    profiles carrying term_counts (aggregate with ``with_counts=True``).
    """
    if not profiles:
        raise ModelError("empty corpus")
    if counting_mode not in _COUNTING_MODES:
        raise ModelError(f"unknown counting mode: {counting_mode!r}")

    counts: dict[tuple[str, str], int] = {}
    for profile in profiles:
        if counting_mode == COUNTING_DISTINCT_USERS:
            increments: Iterable[tuple[str, int]] = ((t, 1) for t in profile.terms)
        else:
            if profile.term_counts is None:
                raise ModelError(
                    "search-events counting requires profiles with term counts "
                    f"(user {profile.user_id!r} has none)"
                )
            increments = profile.term_counts.items()
        for term, n in increments:
            if n <= 0:
                raise ModelError(f"non-positive term count for user {profile.user_id!r}")
            key = (profile.classification, term)
            counts[key] = counts.get(key, 0) + n

    classes = sorted({c for c, _ in counts})
    terms = sorted({t for _, t in counts})
    class_idx = {c: i for i, c in enumerate(classes)}
    term_idx = {t: i for i, t in enumerate(terms)}
    edges = sorted(
        (class_idx[c], term_idx[t], n) for (c, t), n in counts.items()
    )
    model = ClassTermModel(classes, terms, edges, counting_mode)
    logger.info(
        "built model: %d classes, %d terms, %d edges, grand total %d (%s)",
        len(classes),
        len(terms),
        model.n_edges,
        model.grand_total,
        counting_mode,
    )
    return model


# -- persistence -------------------------------------------------------------


def model_to_dict(model: ClassTermModel) -> dict:
    ci = np.repeat(np.arange(len(model.classes)), np.diff(model._cptr))
    edges = [
        [int(c), int(t), int(n)]
        for c, t, n in zip(ci, model._cterm, model._ccnt)
    ]
    return {
        "version": MODEL_FORMAT_VERSION,
        "counting_mode": model.counting_mode,
        "classes": list(model.classes),
        "terms": list(model.terms),
        "edges": edges,
    }


def model_from_dict(doc: dict) -> ClassTermModel:
    if not isinstance(doc, dict):
        raise ModelError("model document is not a JSON object")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model version: {doc.get('version')!r}")
    for key in ("counting_mode", "classes", "terms", "edges"):
        if key not in doc:
            raise ModelError(f"model document missing {key!r}")
    edges = []
    for entry in doc["edges"]:
        if len(entry) != 3 or not all(isinstance(v, int) for v in entry):
            raise ModelError(f"malformed edge entry: {entry!r}")
        edges.append((entry[0], entry[1], entry[2]))
    model = ClassTermModel(doc["classes"], doc["terms"], edges, doc["counting_mode"])
    problems = model.check_consistency()
    if problems:
        raise ModelError(f"model totals failed verification: {problems}")
    return model


def save_model(model: ClassTermModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> ClassTermModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
