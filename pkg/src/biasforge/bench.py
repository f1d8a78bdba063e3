"""Latency and throughput measurements for the filter stage.

Three comparisons: per-utterance filter latency percentiles, the bucketed
index against a flat linear scan on identical queries, and the compiled
kernel against the pure-Python fallback (when both are importable). Numbers
land in a JSON report; a speedup below 1.0 sets an alarm flag instead of
failing, so regressions surface in automation without blocking runs.
"""

from __future__ import annotations

import math
import time
from typing import Sequence

from biasforge import sot
from biasforge._kernels import BACKEND, available_backends
from biasforge.corpus_io import UtteranceRecord
from biasforge.filter_engine import (
    FilterParams,
    MatchIndex,
    enumerate_segments,
    filter_biasing_list,
    remove_common,
)
from biasforge.text_norm import CommonWordSet


def percentile(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile; q in [0, 100]."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100 * len(ordered)))
    return ordered[min(rank, len(ordered)) - 1]


def collect_queries(
    records: Sequence[UtteranceRecord],
    common: CommonWordSet,
    max_span: int | None,
    limit: int,
) -> list[str]:
    """Joined segment strings from the corpus, the filter's real workload."""
    queries: list[str] = []
    for record in records:
        text = record.hypothesis if record.hypothesis is not None else record.reference
        tokens = sot.tokenize_with_markers(text)
        for run_i, run in enumerate(remove_common(tokens, common)):
            for seg in enumerate_segments(run, max_span, run_i):
                queries.append(seg.joined)
                if len(queries) >= limit:
                    return queries
    return queries


def bench_filter_latency(
    records: Sequence[UtteranceRecord],
    index: MatchIndex,
    common: CommonWordSet,
    params: FilterParams,
) -> dict:
    timings = []
    for record in records:
        text = record.hypothesis if record.hypothesis is not None else record.reference
        start = time.perf_counter()
        filter_biasing_list(text, index.entries, common, params, index=index)
        timings.append((time.perf_counter() - start) * 1000)
    return {
        "n_utterances": len(timings),
        "p50_ms": percentile(timings, 50),
        "p95_ms": percentile(timings, 95),
        "total_ms": sum(timings),
    }


def bench_index_vs_scan(index: MatchIndex, queries: Sequence[str], top_n: int) -> dict:
    start = time.perf_counter()
    for q in queries:
        index.top_n(q, top_n)
    indexed_ms = (time.perf_counter() - start) * 1000
    start = time.perf_counter()
    for q in queries:
        index.top_n_linear(q, top_n)
    linear_ms = (time.perf_counter() - start) * 1000
    speedup = linear_ms / indexed_ms if indexed_ms > 0 else 1.0
    return {
        "n_queries": len(queries),
        "indexed_ms": indexed_ms,
        "linear_ms": linear_ms,
        "speedup": speedup,
        "alarm": speedup < 1.0,
    }


def bench_backends(queries: Sequence[str], keys: Sequence[str]) -> dict:
    """Distance throughput of every importable kernel backend."""
    pairs = [(q, keys[i % len(keys)]) for i, q in enumerate(queries)]
    out: dict = {"active": BACKEND, "backends": {}}
    for name, impl in sorted(available_backends().items()):
        start = time.perf_counter()
        for a, b in pairs:
            impl.levenshtein(a, b)
        out["backends"][name] = {
            "n_pairs": len(pairs),
            "total_ms": (time.perf_counter() - start) * 1000,
        }
    backends = out["backends"]
    if "compiled" in backends and "pure" in backends and backends["compiled"]["total_ms"] > 0:
        out["compiled_speedup"] = backends["pure"]["total_ms"] / backends["compiled"]["total_ms"]
    return out


def run_bench(
    records: Sequence[UtteranceRecord],
    entries: list[str],
    common: CommonWordSet,
    params: FilterParams,
    n_queries: int = 1000,
) -> dict:
    index = MatchIndex(entries)
    queries = collect_queries(records, common, params.max_span, n_queries)
    return {
        "backend": BACKEND,
        "list_size": len(entries),
        "filter": bench_filter_latency(records, index, common, params),
        "index_vs_scan": bench_index_vs_scan(index, queries, params.top_n),
        "kernels": bench_backends(queries[: min(len(queries), 200)], entries[:200] or [""]),
    }
