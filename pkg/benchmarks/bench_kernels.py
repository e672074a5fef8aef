#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Builds synthetic CSR inputs at a production-ish scale, runs every kernel on
both backends, and prints the per-call timings and speedup. Usage:

    python benchmarks/bench_kernels.py            # default scale
    python benchmarks/bench_kernels.py --scale 4  # 4x rows everywhere
"""

import argparse
import time

import numpy as np

from searchkin import kernels


def timeit(fn, repeat=5):
    fn()  # warmup (first numba call compiles)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def build_model_arrays(rng, n_classes, n_terms, avg_classes_per_term):
    rows = []
    for _ in range(n_terms):
        k = max(1, rng.poisson(avg_classes_per_term))
        rows.append(np.sort(rng.choice(n_classes, size=min(k, n_classes), replace=False)))
    tptr = np.zeros(n_terms + 1, dtype=np.int64)
    np.cumsum([len(r) for r in rows], out=tptr[1:])
    tcls = np.concatenate(rows).astype(np.int64)
    tcnt = rng.integers(1, 50, size=tcls.shape[0]).astype(np.float64)

    # class-major mirror
    order = np.lexsort((np.repeat(np.arange(n_terms), np.diff(tptr)), tcls))
    term_of_edge = np.repeat(np.arange(n_terms), np.diff(tptr))
    cptr = np.zeros(n_classes + 1, dtype=np.int64)
    np.add.at(cptr, tcls + 1, 1)
    np.cumsum(cptr, out=cptr)
    cterm = term_of_edge[order].astype(np.int64)
    ccnt = tcnt[order]

    class_totals = np.zeros(n_classes)
    np.add.at(class_totals, tcls, tcnt)
    sq = np.zeros(n_terms)
    np.add.at(sq, term_of_edge, tcnt**2)
    return tptr, tcls, tcnt, cptr, cterm, ccnt, class_totals, np.sqrt(sq)


def build_profile_arrays(rng, n_profiles, vocab, avg_terms):
    rows = [
        np.sort(rng.choice(vocab, size=max(1, rng.poisson(avg_terms)), replace=False))
        for _ in range(n_profiles)
    ]
    ptr = np.zeros(n_profiles + 1, dtype=np.int64)
    np.cumsum([len(r) for r in rows], out=ptr[1:])
    return ptr, np.concatenate(rows).astype(np.int64)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=int, default=1, help="multiply the problem sizes")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (best-of)")
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    n_classes, n_terms = 150, 40_000 * args.scale
    n_profiles = 100_000 * args.scale
    tptr, tcls, tcnt, cptr, cterm, ccnt, class_totals, term_norms = build_model_arrays(
        rng, n_classes, n_terms, avg_classes_per_term=6
    )
    grand = float(class_totals.sum())
    kw = np.sort(rng.choice(n_terms, size=8, replace=False)).astype(np.int64)
    src = rng.integers(0, n_terms)
    src_cls = tcls[tptr[src] : tptr[src + 1]]
    src_cnt = tcnt[tptr[src] : tptr[src + 1]]
    pptr, pids = build_profile_arrays(rng, n_profiles, n_terms, avg_terms=12)
    query = np.sort(rng.choice(n_terms, size=10, replace=False)).astype(np.int64)

    cases = {
        f"related_scores ({n_terms} terms, {tcls.shape[0]} edges)": lambda: kernels.related_scores(
            cptr, cterm, ccnt, src_cls, src_cnt, term_norms
        ),
        f"class_log_scores ({n_classes} classes, 8 keywords)": lambda: kernels.class_log_scores(
            tptr, tcls, tcnt, kw, class_totals, grand, 1.0, n_terms
        ),
        f"set_distances ({n_profiles} profiles)": lambda: kernels.set_distances(
            pptr, pids, query, kernels.METRIC_JACCARD
        ),
    }

    print(f"{'kernel':<48} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for label, fn in cases.items():
        timings = {}
        for backend in ("numpy", "numba"):
            kernels.set_backend(backend)
            timings[backend] = timeit(fn, repeat=args.repeat)
        ratio = timings["numpy"] / timings["numba"] if timings["numba"] > 0 else float("inf")
        print(
            f"{label:<48} {timings['numpy'] * 1e3:>8.2f}ms {timings['numba'] * 1e3:>8.2f}ms"
            f" {ratio:>8.1f}x"
        )
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
