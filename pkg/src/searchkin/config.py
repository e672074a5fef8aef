"""Engine configuration: one flat JSON file covering every tunable.

Unknown keys are rejected so typos fail loudly instead of silently running
with defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .augment import AugmentationConfig
from .filtering import FilterPolicy
from .ingest import (
    FORMAT_DELIMITED,
    FORMAT_JSONL,
    ON_ERROR_ABORT,
    ON_ERROR_SKIP,
    ExtractionConfig,
)
from .model import COUNTING_DISTINCT_USERS, COUNTING_SEARCH_EVENTS

_AUGMENT_KEYS = (
    "alpha",
    "distance_metric",
    "neighbor_distance_threshold",
    "max_neighbors_k",
    "related_top_n",
    "smoothing_beta",
    "related_min_score",
    "expansion_weight",
)
_EXTRACTION_KEYS = ("extraction_mode", "extraction_delimiters")
_FILTER_KEYS = ("min_intersection", "min_jaccard")
_TOP_KEYS = (
    "counting_mode",
    "log_format",
    "log_delimiter",
    "on_error",
    "search_mode",
    "filter_depth",
    "result_limit",
)
KNOWN_KEYS = frozenset(_AUGMENT_KEYS + _EXTRACTION_KEYS + _FILTER_KEYS + _TOP_KEYS)


@dataclass(frozen=True)
class EngineConfig:
    augmentation: AugmentationConfig
    extraction: ExtractionConfig
    filter_policy: FilterPolicy
    counting_mode: str = COUNTING_DISTINCT_USERS
    log_format: str = FORMAT_JSONL
    log_delimiter: str = "|"
    on_error: str = ON_ERROR_SKIP
    search_mode: str = "phrase"
    filter_depth: int = 100
    result_limit: int = 20

    def __post_init__(self):
        if self.counting_mode not in (COUNTING_DISTINCT_USERS, COUNTING_SEARCH_EVENTS):
            raise ValueError(f"unknown counting_mode: {self.counting_mode!r}")
        if self.log_format not in (FORMAT_JSONL, FORMAT_DELIMITED):
            raise ValueError(f"unknown log_format: {self.log_format!r}")
        if len(self.log_delimiter) != 1:
            raise ValueError("log_delimiter must be a single character")
        if self.on_error not in (ON_ERROR_SKIP, ON_ERROR_ABORT):
            raise ValueError(f"unknown on_error policy: {self.on_error!r}")
        if self.search_mode not in ("phrase", "all-tokens"):
            raise ValueError(f"unknown search_mode: {self.search_mode!r}")
        if self.filter_depth < 1:
            raise ValueError("filter_depth must be >= 1")
        if self.result_limit < 1:
            raise ValueError("result_limit must be >= 1")


def default_config() -> EngineConfig:
    return EngineConfig(
        augmentation=AugmentationConfig(),
        extraction=ExtractionConfig(),
        filter_policy=FilterPolicy(),
    )


def config_to_dict(config: EngineConfig) -> dict[str, Any]:
    """Flatten to the canonical JSON shape (every known key present)."""
    aug, ext, pol = config.augmentation, config.extraction, config.filter_policy
    return {
        "alpha": aug.alpha,
        "distance_metric": aug.distance_metric,
        "neighbor_distance_threshold": aug.neighbor_distance_threshold,
        "max_neighbors_k": aug.max_neighbors_k,
        "related_top_n": aug.related_top_n,
        "smoothing_beta": aug.smoothing_beta,
        "related_min_score": aug.related_min_score,
        "expansion_weight": aug.expansion_weight,
        "extraction_mode": ext.mode,
        "extraction_delimiters": ext.delimiters,
        "min_intersection": pol.min_intersection,
        "min_jaccard": pol.min_jaccard,
        "counting_mode": config.counting_mode,
        "log_format": config.log_format,
        "log_delimiter": config.log_delimiter,
        "on_error": config.on_error,
        "search_mode": config.search_mode,
        "filter_depth": config.filter_depth,
        "result_limit": config.result_limit,
    }


def config_from_dict(
    overrides: Mapping[str, Any], base: EngineConfig | None = None
) -> EngineConfig:
    """Overlay ``overrides`` onto ``base`` (defaults when None); reject unknown keys."""
    unknown = sorted(set(overrides) - KNOWN_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    flat = config_to_dict(base or default_config())
    flat.update(overrides)
    return EngineConfig(
        augmentation=AugmentationConfig(**{k: flat[k] for k in _AUGMENT_KEYS}),
        extraction=ExtractionConfig(
            mode=flat["extraction_mode"], delimiters=flat["extraction_delimiters"]
        ),
        filter_policy=FilterPolicy(
            min_intersection=flat["min_intersection"], min_jaccard=flat["min_jaccard"]
        ),
        counting_mode=flat["counting_mode"],
        log_format=flat["log_format"],
        log_delimiter=flat["log_delimiter"],
        on_error=flat["on_error"],
        search_mode=flat["search_mode"],
        filter_depth=flat["filter_depth"],
        result_limit=flat["result_limit"],
    )


def load_config(path: str | Path) -> EngineConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return config_from_dict(doc)


def save_config(config: EngineConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
