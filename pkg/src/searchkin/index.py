"""Minimal in-process inverted index with positional postings and tf-idf scoring.

Stands in for the production search engine: serves the retrieval-overlap
validation of term relationships and the augmented queries feeding the
recommender. Tokenization reuses the ingest normalization (lowercase,
whitespace collapse) followed by a whitespace split, nothing smarter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

from .ingest import normalize_term


class DuplicateDocumentError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    body: str
    class_label: str | None = None


@dataclass(frozen=True)
class QueryResult:
    """Hits as (doc_id, score) sorted by descending score then doc_id."""

    hits: tuple[tuple[str, float], ...]
    total_matched: int


def tokenize(text: str) -> list[str]:
    norm = normalize_term(text)
    return norm.split(" ") if norm else []


class SearchIndex:
    """Immutable after :func:`index_documents`; any number of concurrent readers."""

    def __init__(self) -> None:
        # token -> doc_id -> sorted positions
        self._postings: dict[str, dict[str, list[int]]] = {}
        self._class_docs: dict[str, set[str]] = {}
        self._doc_ids: set[str] = set()
        self.doc_count = 0

    def _add(self, doc: Document) -> None:
        if doc.doc_id in self._doc_ids:
            raise DuplicateDocumentError(f"duplicate doc_id: {doc.doc_id!r}")
        if not doc.body.strip():
            raise ValueError(f"document {doc.doc_id!r} has an empty body")
        self._doc_ids.add(doc.doc_id)
        self.doc_count += 1
        if doc.class_label is not None:
            self._class_docs.setdefault(doc.class_label, set()).add(doc.doc_id)
        for pos, token in enumerate(tokenize(doc.body)):
            self._postings.setdefault(token, {}).setdefault(doc.doc_id, []).append(pos)

    def doc_frequency(self, token: str) -> int:
        return len(self._postings.get(token, {}))

    def idf(self, token: str) -> float:
        df = self.doc_frequency(token)
        if df == 0:
            return 0.0
        return math.log(1.0 + self.doc_count / df)

    def class_doc_ids(self, class_label: str) -> frozenset[str]:
        return frozenset(self._class_docs.get(class_label, set()))


def index_documents(docs: Iterable[Document]) -> SearchIndex:
    index = SearchIndex()
    for doc in docs:
        index._add(doc)
    return index


def _phrase_docs(index: SearchIndex, tokens: Sequence[str]) -> set[str]:
    """Docs containing the tokens contiguously in order."""
    postings = [index._postings.get(tok) for tok in tokens]
    if any(p is None for p in postings):
        return set()
    candidates = set(postings[0])
    for p in postings[1:]:
        candidates &= set(p)
    matched = set()
    for doc_id in candidates:
        starts = postings[0][doc_id]
        for start in starts:
            if all(start + i in _pos_set(postings[i], doc_id) for i in range(1, len(tokens))):
                matched.add(doc_id)
                break
    return matched


def _pos_set(posting: dict[str, list[int]], doc_id: str) -> set[int]:
    return set(posting[doc_id])


def _all_token_docs(index: SearchIndex, tokens: Sequence[str]) -> set[str]:
    docs: set[str] | None = None
    for tok in tokens:
        posting = index._postings.get(tok)
        if not posting:
            return set()
        docs = set(posting) if docs is None else docs & set(posting)
        if not docs:
            return set()
    return docs or set()


def search(
    index: SearchIndex,
    query: str,
    mode: str = "phrase",
    class_filter: str | None = None,
    limit: int = 10,
) -> QueryResult:
    """Run one query; score = sum over query tokens of tf * ln(1 + N/df).

    ``phrase`` mode requires the normalized query to appear contiguously;
    ``all-tokens`` requires every token somewhere in the document.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    if mode not in ("phrase", "all-tokens"):
        raise ValueError(f"unknown search mode: {mode!r}")
    tokens = tokenize(query)
    if not tokens:
        return QueryResult(hits=(), total_matched=0)

    if mode == "phrase" and len(tokens) > 1:
        matched = _phrase_docs(index, tokens)
    else:
        matched = _all_token_docs(index, tokens)
    if class_filter is not None:
        matched &= index._class_docs.get(class_filter, set())

    idf = {tok: index.idf(tok) for tok in set(tokens)}
    scored = []
    for doc_id in matched:
        score = 0.0
        for tok in tokens:
            positions = index._postings[tok].get(doc_id)
            if positions:
                score += len(positions) * idf[tok]
        scored.append((doc_id, score))
    scored.sort(key=lambda hit: (-hit[1], hit[0]))
    return QueryResult(hits=tuple(scored[:limit]), total_matched=len(matched))


def result_doc_set(
    index: SearchIndex,
    query: str,
    mode: str = "phrase",
    depth: int = 100,
) -> set[str]:
    """Doc ids of the top-``depth`` hits for the query."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    result = search(index, query, mode=mode, limit=depth)
    return {doc_id for doc_id, _ in result.hits}


# -- corpus IO ----------------------------------------------------------------


def load_corpus(fp: IO[str] | str | Path) -> list[Document]:
    """Read a JSONL corpus: {"doc_id", "class_label" (nullable), "body"}."""
    if isinstance(fp, (str, Path)):
        with open(fp, "r", encoding="utf-8") as handle:
            return load_corpus(handle)
    docs = []
    for line_no, line in enumerate(fp, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"corpus line {line_no}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict) or "doc_id" not in obj or "body" not in obj:
            raise ValueError(f"corpus line {line_no}: expected doc_id and body fields")
        docs.append(
            Document(
                doc_id=str(obj["doc_id"]),
                body=str(obj["body"]),
                class_label=obj.get("class_label"),
            )
        )
    return docs


def dump_corpus(docs: Iterable[Document], fp: IO[str]) -> None:
    for doc in docs:
        fp.write(
            json.dumps(
                {"doc_id": doc.doc_id, "class_label": doc.class_label, "body": doc.body},
                sort_keys=True,
                ensure_ascii=True,
            )
        )
        fp.write("\n")
