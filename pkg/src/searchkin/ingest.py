"""Search-log ingestion: parse raw events, normalize terms, aggregate per-user profiles.

Normalization is deliberately language-agnostic: lowercasing and whitespace
collapsing only, no stemming and no stopword lists, so the pipeline works on
any language the site receives queries in.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping

logger = logging.getLogger(__name__)

FORMAT_JSONL = "jsonl"
FORMAT_DELIMITED = "delimited"

MODE_WHOLE_QUERY = "whole-query"
MODE_SPLIT = "split"

ON_ERROR_SKIP = "skip"
ON_ERROR_ABORT = "abort"


class ParseAbort(ValueError):
    """Raised under the abort policy; carries the offending line number."""

    def __init__(self, line_no: int, cause: str):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


@dataclass(frozen=True)
class SearchLogRecord:
    """One raw search event."""

    user_id: str
    classification: str
    query: str
    timestamp: int | None = None


@dataclass(frozen=True)
class UserProfile:
    """A user's classification plus their aggregated distinct search terms.

    ``terms`` is kept as a sorted tuple (canonical set representation).
    ``term_counts`` is only populated when the aggregation is asked to keep
    per-term search-event counts (used by the search-events counting mode);
    it maps each term to the number of searches that contained it.
    """

    user_id: str
    classification: str
    terms: tuple[str, ...]
    term_counts: Mapping[str, int] | None = None


@dataclass
class IngestReport:
    records_read: int = 0
    records_malformed: int = 0
    users_emitted: int = 0
    users_dropped_empty: int = 0

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_malformed": self.records_malformed,
            "users_emitted": self.users_emitted,
            "users_dropped_empty": self.users_dropped_empty,
        }


@dataclass(frozen=True)
class ExtractionConfig:
    """How search terms are pulled out of a query string.

    ``whole-query`` treats the normalized query as a single keyword phrase
    (queries like "Java Developer" stay one term). ``split`` breaks the query
    on any of the configured delimiter characters first.
    """

    mode: str = MODE_WHOLE_QUERY
    delimiters: str = ",;"

    def __post_init__(self):
        if self.mode not in (MODE_WHOLE_QUERY, MODE_SPLIT):
            raise ValueError(f"unknown extraction mode: {self.mode!r}")
        if self.mode == MODE_SPLIT and not self.delimiters:
            raise ValueError("split mode needs at least one delimiter")


def normalize_term(raw: str) -> str | None:
    """Lowercase, trim, and collapse internal whitespace runs; None if empty."""
    collapsed = " ".join(raw.split())
    if not collapsed:
        return None
    return collapsed.lower()


def extract_terms(query: str, config: ExtractionConfig | None = None) -> list[str]:
    """Extract normalized search terms from one query string.

    Whole-query mode yields at most one term; split mode yields the normalized
    non-empty fragments in order. Duplicates within one query are removed.
    """
    config = config or ExtractionConfig()
    if config.mode == MODE_WHOLE_QUERY:
        term = normalize_term(query)
        return [term] if term is not None else []

    fragments = [query]
    for delim in config.delimiters:
        fragments = [piece for frag in fragments for piece in frag.split(delim)]
    seen: dict[str, None] = {}
    for frag in fragments:
        term = normalize_term(frag)
        if term is not None and term not in seen:
            seen[term] = None
    return list(seen)


def _iter_lines(stream: IO[bytes] | IO[str] | Iterable[str]) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            yield line.decode("utf-8")
        else:
            yield line


def _record_from_json(line: str) -> SearchLogRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("not a JSON object")
    for key in ("user_id", "classification", "query"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
        if not isinstance(obj[key], str):
            raise ValueError(f"field {key!r} is not a string")
    user_id = obj["user_id"].strip()
    classification = obj["classification"].strip()
    if not user_id:
        raise ValueError("empty user_id")
    if not classification:
        raise ValueError("empty classification")
    ts = obj.get("ts")
    if ts is not None and not isinstance(ts, int):
        raise ValueError("field 'ts' is not integer milliseconds")
    return SearchLogRecord(user_id, classification, obj["query"], ts)


def _record_from_delimited(line: str, sep: str) -> SearchLogRecord:
    parts = line.split(sep, 2)
    if len(parts) != 3:
        raise ValueError(f"expected 3 {sep!r}-separated columns, got {len(parts)}")
    user_id, classification, query = parts[0].strip(), parts[1].strip(), parts[2]
    if not user_id:
        raise ValueError("empty user_id")
    if not classification:
        raise ValueError("empty classification")
    return SearchLogRecord(user_id, classification, query)


def parse_log_records(
    stream: IO[bytes] | IO[str] | Iterable[str],
    format: str = FORMAT_JSONL,
    *,
    sep: str = "|",
    on_error: str = ON_ERROR_SKIP,
) -> tuple[list[SearchLogRecord], IngestReport]:
    """Parse a stream of log lines into records, preserving order.

    Malformed lines are counted and skipped, or raise :class:`ParseAbort`
    under the ``abort`` policy. Blank lines are ignored without being counted.
    """
    if format not in (FORMAT_JSONL, FORMAT_DELIMITED):
        raise ValueError(f"unknown log format: {format!r}")
    if on_error not in (ON_ERROR_SKIP, ON_ERROR_ABORT):
        raise ValueError(f"unknown error policy: {on_error!r}")

    records: list[SearchLogRecord] = []
    report = IngestReport()
    for line_no, raw in enumerate(_iter_lines(stream), 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        report.records_read += 1
        try:
            if format == FORMAT_JSONL:
                record = _record_from_json(line)
            else:
                record = _record_from_delimited(line, sep)
        except (ValueError, UnicodeDecodeError) as exc:
            if on_error == ON_ERROR_ABORT:
                raise ParseAbort(line_no, str(exc)) from exc
            report.records_malformed += 1
            logger.debug("skipping malformed line %d: %s", line_no, exc)
            continue
        records.append(record)
    return records, report


def aggregate_user_profiles(
    records: Iterable[SearchLogRecord],
    config: ExtractionConfig | None = None,
    *,
    with_counts: bool = False,
) -> tuple[list[UserProfile], IngestReport]:
    """Fold parsed records into one profile per user.

    A user's terms are the union of the terms extracted from all their
    queries. Users whose every query normalizes to nothing are dropped and
    counted. When a user appears with several classifications, the most
    frequent one wins (ties broken by the lexicographically smallest label).

    With ``with_counts=True`` each profile also carries per-term search-event
    counts: a term is counted once per record whose query contained it.
    """
    config = config or ExtractionConfig()
    report = IngestReport()
    class_votes: dict[str, Counter] = defaultdict(Counter)
    term_counts: dict[str, Counter] = defaultdict(Counter)

    for record in records:
        report.records_read += 1
        class_votes[record.user_id][record.classification] += 1
        for term in extract_terms(record.query, config):
            term_counts[record.user_id][term] += 1

    profiles: list[UserProfile] = []
    for user_id in sorted(class_votes):
        counts = term_counts[user_id]
        if not counts:
            report.users_dropped_empty += 1
            continue
        votes = class_votes[user_id]
        best_count = max(votes.values())
        classification = min(label for label, n in votes.items() if n == best_count)
        profiles.append(
            UserProfile(
                user_id=user_id,
                classification=classification,
                terms=tuple(sorted(counts)),
                term_counts=dict(sorted(counts.items())) if with_counts else None,
            )
        )
        report.users_emitted += 1

    logger.info(
        "aggregated %d records into %d profiles (%d dropped empty)",
        report.records_read,
        report.users_emitted,
        report.users_dropped_empty,
    )
    return profiles, report


def dump_profiles(profiles: Iterable[UserProfile], fp: IO[str]) -> None:
    """Write profiles as JSONL (debug format: user_id, classification, sorted terms)."""
    for profile in profiles:
        fp.write(
            json.dumps(
                {
                    "user_id": profile.user_id,
                    "classification": profile.classification,
                    "terms": list(profile.terms),
                },
                sort_keys=True,
                ensure_ascii=True,
            )
        )
        fp.write("\n")


def load_profiles(fp: IO[str]) -> list[UserProfile]:
    profiles = []
    for line in fp:
        if not line.strip():
            continue
        obj = json.loads(line)
        profiles.append(
            UserProfile(
                user_id=obj["user_id"],
                classification=obj["classification"],
                terms=tuple(obj["terms"]),
            )
        )
    return profiles
