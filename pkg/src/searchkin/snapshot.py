"""Build, persist, and load the immutable engine snapshot.

A snapshot directory holds everything the query-time surface needs, all as
human-readable JSON with canonical ordering so identical inputs produce
byte-identical artifacts:

    model.json      class/term count model
    profiles.jsonl  per-user term sets
    corpus.jsonl    verbatim copy of the document corpus (index is rebuilt)
    config.json     effective engine configuration
    manifest.json   input digests, mtimes, and build statistics

The payload builders at the bottom are shared by the CLI and the HTTP
service, which is what makes their JSON bodies identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import augment
from .config import EngineConfig, config_from_dict, default_config, load_config, save_config
from .filtering import FilterPolicy, filter_related, write_filter_report
from .index import SearchIndex, index_documents, load_corpus
from .ingest import (
    IngestReport,
    UserProfile,
    aggregate_user_profiles,
    dump_profiles,
    load_profiles,
    normalize_term,
    parse_log_records,
)
from .model import (
    COUNTING_SEARCH_EVENTS,
    ClassTermModel,
    UnknownTermError,
    build_model,
    load_model,
    save_model,
)

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"
PROFILES_FILE = "profiles.jsonl"
CORPUS_FILE = "corpus.jsonl"
CONFIG_FILE = "config.json"
MANIFEST_FILE = "manifest.json"


def render_json(payload: Any) -> str:
    """Canonical JSON rendering used for every artifact and response body."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


@dataclass
class EngineSnapshot:
    model: ClassTermModel
    index: SearchIndex
    profiles: list[UserProfile]
    config: EngineConfig
    manifest: dict
    _profiles_by_id: dict[str, UserProfile] = field(init=False, repr=False)

    def __post_init__(self):
        self._profiles_by_id = {p.user_id: p for p in self.profiles}


def _file_stamp(path: Path) -> dict:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    stat = path.stat()
    return {"sha256": digest, "bytes": stat.st_size, "mtime_ns": stat.st_mtime_ns}


def build_snapshot(
    logs_path: str | Path,
    corpus_path: str | Path,
    out_dir: str | Path,
    config_path: str | Path | None = None,
) -> tuple[EngineSnapshot, IngestReport]:
    """Run the full build pipeline and write the snapshot directory."""
    logs_path, corpus_path = Path(logs_path), Path(corpus_path)
    out = Path(out_dir)
    for path in (logs_path, corpus_path):
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.is_file():
            raise FileNotFoundError(f"config file not found: {config_path}")
        config = load_config(config_path)
    else:
        config = default_config()

    with open(logs_path, "rb") as fh:
        records, parse_report = parse_log_records(
            fh, config.log_format, sep=config.log_delimiter, on_error=config.on_error
        )
    profiles, agg_report = aggregate_user_profiles(
        records,
        config.extraction,
        with_counts=config.counting_mode == COUNTING_SEARCH_EVENTS,
    )
    report = IngestReport(
        records_read=parse_report.records_read,
        records_malformed=parse_report.records_malformed,
        users_emitted=agg_report.users_emitted,
        users_dropped_empty=agg_report.users_dropped_empty,
    )
    model = build_model(profiles, config.counting_mode)
    documents = load_corpus(corpus_path)
    index = index_documents(documents)

    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / MODEL_FILE)
    with open(out / PROFILES_FILE, "w", encoding="utf-8") as fh:
        dump_profiles(profiles, fh)
    shutil.copyfile(corpus_path, out / CORPUS_FILE)
    save_config(config, out / CONFIG_FILE)

    manifest = {
        "version": 1,
        "inputs": {
            "logs": _file_stamp(logs_path),
            "corpus": _file_stamp(corpus_path),
            "config": _file_stamp(config_path) if config_path is not None else None,
        },
        "stats": {
            "classes": len(model.classes),
            "terms": len(model.terms),
            "edges": model.n_edges,
            "profiles": len(profiles),
            "documents": len(documents),
        },
        "report": report.to_dict(),
    }
    (out / MANIFEST_FILE).write_text(render_json(manifest), encoding="utf-8")
    logger.info("snapshot written to %s", out)
    return EngineSnapshot(model, index, profiles, config, manifest), report


def load_snapshot(snapshot_dir: str | Path) -> EngineSnapshot:
    """Load a snapshot directory; the search index is rebuilt from the corpus."""
    root = Path(snapshot_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"snapshot directory not found: {root}")
    for name in (MODEL_FILE, PROFILES_FILE, CORPUS_FILE, CONFIG_FILE, MANIFEST_FILE):
        if not (root / name).is_file():
            raise FileNotFoundError(f"snapshot is missing {name}: {root / name}")
    model = load_model(root / MODEL_FILE)
    with open(root / PROFILES_FILE, "r", encoding="utf-8") as fh:
        profiles = load_profiles(fh)
    index = index_documents(load_corpus(root / CORPUS_FILE))
    config = load_config(root / CONFIG_FILE)
    manifest = json.loads((root / MANIFEST_FILE).read_text(encoding="utf-8"))
    return EngineSnapshot(model, index, profiles, config, manifest)


# -- query-time payloads (shared by CLI and HTTP) -------------------------------


def related_payload(
    snapshot: EngineSnapshot,
    term: str,
    top_n: int | None = None,
    min_score: float | None = None,
    use_filter: bool = False,
    min_intersection: int | None = None,
    min_jaccard: float | None = None,
    report_path: str | Path | None = None,
) -> dict:
    """Related terms for one source term, optionally overlap-filtered."""
    aug = snapshot.config.augmentation
    normalized = normalize_term(term)
    if normalized is None:
        raise UnknownTermError(f"unknown term: {term!r}")
    candidates = snapshot.model.related_candidates(
        normalized,
        top_n=top_n if top_n is not None else aug.related_top_n,
        min_score=min_score if min_score is not None else aug.related_min_score,
    )
    relations = candidates.relations
    if use_filter:
        base = snapshot.config.filter_policy
        policy = FilterPolicy(
            min_intersection=(
                min_intersection if min_intersection is not None else base.min_intersection
            ),
            min_jaccard=min_jaccard if min_jaccard is not None else base.min_jaccard,
        )
        outcome = filter_related(
            snapshot.index,
            candidates,
            policy=policy,
            mode=snapshot.config.search_mode,
            depth=snapshot.config.filter_depth,
        )
        relations = outcome.kept
        if report_path is not None:
            with open(report_path, "w", encoding="utf-8") as fh:
                write_filter_report(outcome, fh)
    return {
        "source": normalized,
        "filter": use_filter,
        "relations": [{"target": r.target, "score": r.score} for r in relations],
    }


def classify_payload(
    snapshot: EngineSnapshot, keywords: Sequence[str], beta: float | None = None
) -> dict:
    """Classification scores for a keyword list (raises on empty/unknown input)."""
    normalized = _normalize_keywords(keywords)
    smoothing = beta if beta is not None else snapshot.config.augmentation.smoothing_beta
    result = snapshot.model.classify_keywords(normalized, beta=smoothing)
    return {
        "scores": dict(sorted(result.scores.items())),
        "smoothing_beta": result.smoothing_beta,
    }


def recommend_payload(
    snapshot: EngineSnapshot,
    keywords: Sequence[str],
    overrides: Mapping[str, Any] | None = None,
) -> dict:
    """Decision trace plus recommended items for a keyword list."""
    config = snapshot.config
    if overrides:
        config = config_from_dict(overrides, base=config)
    normalized = _normalize_keywords(keywords)
    decision, recommendations = augment.recommend(
        snapshot.model, snapshot.profiles, snapshot.index, normalized, config
    )
    return {
        "decision": augment.decision_to_dict(decision, config.augmentation.alpha),
        "items": [
            {"doc_id": item.doc_id, "score": item.score, "provenance": list(item.provenance)}
            for item in recommendations.items
        ],
    }


def health_payload(snapshot: EngineSnapshot) -> dict:
    return {"status": "ok", "manifest": snapshot.manifest}


def _normalize_keywords(keywords: Sequence[str]) -> list[str]:
    normalized = []
    for raw in keywords:
        term = normalize_term(raw)
        if term is not None and term not in normalized:
            normalized.append(term)
    if not normalized:
        raise ValueError("no usable keywords")
    return normalized
