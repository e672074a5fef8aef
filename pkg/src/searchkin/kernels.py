"""Numeric hot kernels with two interchangeable backends.

The scoring loops that dominate runtime at scale (relatedness scoring across
the whole vocabulary, class log-scores for a keyword set, batch set distances
for neighbor search) are implemented twice:

* a numba ``@njit`` loop version, compiled lazily on first use, and
* a vectorized pure-numpy fallback.

Backend selection: the ``SEARCHKIN_NUMBA`` environment variable ("0", "false",
"no" or "off" forces numpy), otherwise numba when importable. Tests and the
benchmark switch explicitly via :func:`set_backend`. Both backends are exact
to floating-point roundoff of each other's results.
"""

from __future__ import annotations

import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

BACKEND_NUMBA = "numba"
BACKEND_NUMPY = "numpy"

METRIC_JACCARD = 0
METRIC_HAMMING = 1
METRIC_EUCLIDEAN = 2

_FALSY = {"0", "false", "no", "off"}

_backend: str | None = None
_jitted: dict[str, object] = {}


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _resolve_auto() -> str:
    if os.environ.get("SEARCHKIN_NUMBA", "").strip().lower() in _FALSY:
        return BACKEND_NUMPY
    if not _numba_available():
        logger.info("numba not importable, falling back to numpy kernels")
        return BACKEND_NUMPY
    return BACKEND_NUMBA


def active_backend() -> str:
    """Name of the backend that will run the kernels ("numba" or "numpy")."""
    global _backend
    if _backend is None:
        _backend = _resolve_auto()
    return _backend


def set_backend(name: str) -> str:
    """Force a backend ("numba", "numpy") or re-resolve with "auto"."""
    global _backend
    if name == "auto":
        _backend = _resolve_auto()
    elif name == BACKEND_NUMPY:
        _backend = BACKEND_NUMPY
    elif name == BACKEND_NUMBA:
        if not _numba_available():
            raise RuntimeError("numba backend requested but numba is not importable")
        _backend = BACKEND_NUMBA
    else:
        raise ValueError(f"unknown backend: {name!r}")
    return _backend


def _jit(name: str, py_func):
    impl = _jitted.get(name)
    if impl is None:
        from numba import njit

        impl = njit(cache=True)(py_func)
        _jitted[name] = impl
    return impl


# ---------------------------------------------------------------------------
# Kernel 1: cosine relatedness of one term's class vector against all terms.
#
# The model's counts are held as a class-major CSR (class_ptr/class_term/
# class_count). Cosine over the class-conditional vectors P(c|k) equals cosine
# over the raw count columns because each term's vector is a positive scalar
# multiple of its count column.
# ---------------------------------------------------------------------------


def _related_scores_loops(class_ptr, class_term, class_count, src_cls, src_cnt, term_norms):
    n_terms = term_norms.shape[0]
    scores = np.zeros(n_terms, dtype=np.float64)
    src_norm = 0.0
    for j in range(src_cnt.shape[0]):
        src_norm += src_cnt[j] * src_cnt[j]
    src_norm = math.sqrt(src_norm)
    if src_norm == 0.0:
        return scores
    for j in range(src_cls.shape[0]):
        c = src_cls[j]
        w = src_cnt[j]
        for e in range(class_ptr[c], class_ptr[c + 1]):
            scores[class_term[e]] += w * class_count[e]
    for t in range(n_terms):
        if scores[t] > 0.0:
            scores[t] /= src_norm * term_norms[t]
    return scores


def _related_scores_numpy(class_ptr, class_term, class_count, src_cls, src_cnt, term_norms):
    scores = np.zeros(term_norms.shape[0], dtype=np.float64)
    src_norm = float(np.sqrt(np.dot(src_cnt, src_cnt)))
    if src_norm == 0.0:
        return scores
    for c, w in zip(src_cls, src_cnt):
        lo, hi = class_ptr[c], class_ptr[c + 1]
        # term ids are unique within one class row, so fancy += is safe
        scores[class_term[lo:hi]] += w * class_count[lo:hi]
    nz = scores > 0.0
    scores[nz] /= src_norm * term_norms[nz]
    return scores


def related_scores(class_ptr, class_term, class_count, src_cls, src_cnt, term_norms):
    """Cosine similarity of the source term's class-count vector vs every term.

    Terms sharing no class with the source come back exactly 0.0.
    """
    args = (
        np.ascontiguousarray(class_ptr, dtype=np.int64),
        np.ascontiguousarray(class_term, dtype=np.int64),
        np.ascontiguousarray(class_count, dtype=np.float64),
        np.ascontiguousarray(src_cls, dtype=np.int64),
        np.ascontiguousarray(src_cnt, dtype=np.float64),
        np.ascontiguousarray(term_norms, dtype=np.float64),
    )
    if active_backend() == BACKEND_NUMBA:
        return _jit("related_scores", _related_scores_loops)(*args)
    return _related_scores_numpy(*args)


# ---------------------------------------------------------------------------
# Kernel 2: smoothed naive-Bayes log-scores of every class for a keyword set.
#
# log p_c = log(class_total_c) - log(grand_total)
#           + sum_k log(f_ck + beta) - n_kw * log(class_total_c + beta * V)
# With beta == 0 a class missing any keyword scores -inf (zero probability).
# ---------------------------------------------------------------------------


def _class_log_scores_loops(
    term_ptr, term_cls, term_count, kw_ids, class_totals, grand_total, beta, vocab_size
):
    n_classes = class_totals.shape[0]
    n_kw = kw_ids.shape[0]
    present_logsum = np.zeros(n_classes, dtype=np.float64)
    present_n = np.zeros(n_classes, dtype=np.int64)
    for i in range(n_kw):
        t = kw_ids[i]
        for e in range(term_ptr[t], term_ptr[t + 1]):
            c = term_cls[e]
            present_logsum[c] += math.log(term_count[e] + beta)
            present_n[c] += 1
    out = np.empty(n_classes, dtype=np.float64)
    log_grand = math.log(grand_total)
    for c in range(n_classes):
        missing = n_kw - present_n[c]
        if beta > 0.0:
            kw_term = present_logsum[c] + missing * math.log(beta)
        elif missing > 0:
            out[c] = -np.inf
            continue
        else:
            kw_term = present_logsum[c]
        out[c] = (
            math.log(class_totals[c])
            - log_grand
            + kw_term
            - n_kw * math.log(class_totals[c] + beta * vocab_size)
        )
    return out


def _class_log_scores_numpy(
    term_ptr, term_cls, term_count, kw_ids, class_totals, grand_total, beta, vocab_size
):
    n_classes = class_totals.shape[0]
    n_kw = kw_ids.shape[0]
    present_logsum = np.zeros(n_classes, dtype=np.float64)
    present_n = np.zeros(n_classes, dtype=np.int64)
    for t in kw_ids:
        lo, hi = term_ptr[t], term_ptr[t + 1]
        cls = term_cls[lo:hi]
        present_logsum[cls] += np.log(term_count[lo:hi] + beta)
        present_n[cls] += 1
    missing = n_kw - present_n
    if beta > 0.0:
        kw_term = present_logsum + missing * math.log(beta)
    else:
        kw_term = np.where(missing > 0, -np.inf, present_logsum)
    return (
        np.log(class_totals)
        - math.log(grand_total)
        + kw_term
        - n_kw * np.log(class_totals + beta * vocab_size)
    )


def class_log_scores(
    term_ptr, term_cls, term_count, kw_ids, class_totals, grand_total, beta, vocab_size
):
    """Unnormalized log posterior of every class given the keyword ids."""
    args = (
        np.ascontiguousarray(term_ptr, dtype=np.int64),
        np.ascontiguousarray(term_cls, dtype=np.int64),
        np.ascontiguousarray(term_count, dtype=np.float64),
        np.ascontiguousarray(kw_ids, dtype=np.int64),
        np.ascontiguousarray(class_totals, dtype=np.float64),
        float(grand_total),
        float(beta),
        float(vocab_size),
    )
    if active_backend() == BACKEND_NUMBA:
        return _jit("class_log_scores", _class_log_scores_loops)(*args)
    return _class_log_scores_numpy(*args)


# ---------------------------------------------------------------------------
# Kernel 3: distance from one term-id set to many profiles at once.
#
# Profiles are a CSR of sorted term ids; the query is a sorted id array.
# metric: 0 = jaccard distance, 1 = hamming (|symmetric difference|),
# 2 = euclidean (sqrt of hamming). Distances over indicator vectors depend
# only on set sizes and the intersection, so no dense vectors are formed.
# ---------------------------------------------------------------------------


def _set_distances_loops(prof_ptr, prof_ids, query_ids, metric):
    n_prof = prof_ptr.shape[0] - 1
    nq = query_ids.shape[0]
    out = np.empty(n_prof, dtype=np.float64)
    for p in range(n_prof):
        lo, hi = prof_ptr[p], prof_ptr[p + 1]
        inter = 0
        i = lo
        j = 0
        while i < hi and j < nq:
            a = prof_ids[i]
            b = query_ids[j]
            if a == b:
                inter += 1
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
        size_p = hi - lo
        if metric == 0:
            union = size_p + nq - inter
            out[p] = 0.0 if union == 0 else 1.0 - inter / union
        else:
            sym = size_p + nq - 2 * inter
            out[p] = float(sym) if metric == 1 else math.sqrt(float(sym))
    return out


def _set_distances_numpy(prof_ptr, prof_ids, query_ids, metric):
    n_prof = prof_ptr.shape[0] - 1
    sizes = np.diff(prof_ptr)
    nq = query_ids.shape[0]
    if prof_ids.shape[0] == 0:
        inter = np.zeros(n_prof, dtype=np.int64)
    else:
        member = np.isin(prof_ids, query_ids)
        row_of = np.repeat(np.arange(n_prof), sizes)
        inter = np.bincount(row_of[member], minlength=n_prof).astype(np.int64)
    if metric == METRIC_JACCARD:
        union = sizes + nq - inter
        with np.errstate(invalid="ignore", divide="ignore"):
            dist = 1.0 - inter / union
        return np.where(union == 0, 0.0, dist)
    sym = (sizes + nq - 2 * inter).astype(np.float64)
    return sym if metric == METRIC_HAMMING else np.sqrt(sym)


def set_distances(prof_ptr, prof_ids, query_ids, metric: int):
    """Distance from the query id set to every profile row."""
    args = (
        np.ascontiguousarray(prof_ptr, dtype=np.int64),
        np.ascontiguousarray(prof_ids, dtype=np.int64),
        np.ascontiguousarray(query_ids, dtype=np.int64),
        int(metric),
    )
    if active_backend() == BACKEND_NUMBA:
        return _jit("set_distances", _set_distances_loops)(*args)
    return _set_distances_numpy(*args)


def warmup() -> str:
    """Trigger JIT compilation of all kernels; returns the active backend."""
    ptr = np.array([0, 1], dtype=np.int64)
    ids = np.array([0], dtype=np.int64)
    cnt = np.array([1.0])
    related_scores(ptr, ids, cnt, ids, cnt, cnt)
    class_log_scores(ptr, ids, cnt, ids, cnt, 1.0, 1.0, 1)
    set_distances(ptr, ids, ids, METRIC_JACCARD)
    return active_backend()
