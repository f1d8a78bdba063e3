"""Two-stage relevance filtering of large biasing lists.

Stage one strips the most common words from a first-pass hypothesis,
leaving short runs of distinctive tokens. Stage two enumerates every
contiguous sub-span of those runs (up to ``max_span`` tokens), joins each
span without separators, and keeps the top-N biasing entries by character
edit distance to the joined span. Joining without separators is what lets a
split recognition error like "CHARACE THSATION" still reach the single
list entry "CHARACTERISATION".

The match index buckets entries by length and scans nearest-length buckets
first, so the running N-th-best distance prunes whole buckets via the
length-difference lower bound. Index and plain linear scan return identical
results by construction; both are kept because the benchmark compares them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from biasforge import sot
from biasforge._kernels import levenshtein, prepare_keys, scan_best
from biasforge.errors import ValidationError
from biasforge.text_norm import CommonWordSet

DEFAULT_TOP_N = 10
DEFAULT_MAX_SPAN = 3


@dataclass
class RareRun:
    """Consecutive hypothesis tokens that survived common-word removal."""

    tokens: list[str]
    start_index: int


@dataclass
class SegmentCandidate:
    """One contiguous sub-span of a run, matched as a single string."""

    run_index: int
    offset: int
    length: int
    start_index: int
    joined: str


@dataclass
class FilterParams:
    top_n: int = DEFAULT_TOP_N
    max_span: int | None = DEFAULT_MAX_SPAN
    common_k: int = 5000
    distance_cap: int | None = None
    output_cap: int | None = None

    def __post_init__(self):
        if self.top_n < 1:
            raise ValidationError(f"top_n must be >= 1, got {self.top_n}")
        if self.max_span is not None and self.max_span < 1:
            raise ValidationError(f"max_span must be >= 1 or None, got {self.max_span}")


@dataclass
class FilterMatch:
    word: str
    distance: int
    segment: str


@dataclass
class FilterOutput:
    """Filtered entries ordered by (best distance, word)."""

    matches: list[FilterMatch] = field(default_factory=list)

    @property
    def entries(self) -> list[str]:
        return [m.word for m in self.matches]


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance with unit costs."""
    return levenshtein(a, b)


def remove_common(tokens: list[str], common: CommonWordSet) -> list[RareRun]:
    """Maximal runs of consecutive non-common tokens, in order.

    Speaker-change markers break runs like common words do, so a segment
    never spans two speakers.
    """
    runs: list[RareRun] = []
    current: list[str] = []
    start = 0
    for i, tok in enumerate(tokens):
        if tok == sot.SPEAKER_CHANGE or tok in common:
            if current:
                runs.append(RareRun(tokens=current, start_index=start))
                current = []
        else:
            if not current:
                start = i
            current.append(tok)
    if current:
        runs.append(RareRun(tokens=current, start_index=start))
    return runs


def enumerate_segments(
    run: RareRun, max_span: int | None = DEFAULT_MAX_SPAN, run_index: int = 0
) -> list[SegmentCandidate]:
    """All sub-spans of length 1..min(len(run), max_span), offset-major."""
    if not run.tokens:
        raise ValidationError("cannot enumerate segments of an empty run")
    n = len(run.tokens)
    limit = n if max_span is None else min(n, max_span)
    out = []
    for offset in range(n):
        for length in range(1, min(limit, n - offset) + 1):
            out.append(
                SegmentCandidate(
                    run_index=run_index,
                    offset=offset,
                    length=length,
                    start_index=run.start_index + offset,
                    joined="".join(run.tokens[offset : offset + length]),
                )
            )
    return out


def _match_key(entry: str) -> str:
    return entry.replace(" ", "")


class MatchIndex:
    """Length-bucketed biasing entries supporting exact top-N queries.

    Multi-word entries are keyed with separators removed; the original
    entry string is what gets returned and what breaks distance ties.
    """

    def __init__(self, entries: list[str]):
        if len(set(entries)) != len(entries):
            raise ValidationError("biasing entries must be unique")
        self.entries = list(entries)
        items = sorted(((_match_key(e), e) for e in entries), key=lambda kv: kv[1])
        self._flat_prepared = prepare_keys([k for k, _ in items])
        self._flat_entries = [e for _, e in items]
        grouped: dict[int, tuple[list[str], list[str]]] = {}
        for key, entry in items:
            bucket = grouped.setdefault(len(key), ([], []))
            bucket[0].append(key)
            bucket[1].append(entry)
        self._buckets = {
            length: (prepare_keys(keys), bucket_entries)
            for length, (keys, bucket_entries) in grouped.items()
        }
        self._lengths = sorted(self._buckets)

    def __len__(self) -> int:
        return len(self.entries)

    def top_n(self, query: str, n: int) -> list[tuple[str, int]]:
        """The n entries nearest to ``query``, ties lexicographic.

        Identical to a full linear scan; bucket ordering and the length
        lower bound only skip candidates that cannot place.
        """
        if n < 1:
            raise ValidationError(f"n must be >= 1, got {n}")
        if not self.entries:
            return []
        lq = len(query)
        best: list[tuple[int, str]] = []
        for length in sorted(self._lengths, key=lambda l: (abs(l - lq), l)):
            if len(best) >= n and abs(length - lq) > best[-1][0]:
                break
            prepared, entries = self._buckets[length]
            scan_best(query, prepared, entries, n, best)
        return [(entry, d) for d, entry in best]

    def top_n_linear(self, query: str, n: int) -> list[tuple[str, int]]:
        """Single flat scan over all entries; the benchmark's baseline."""
        if n < 1:
            raise ValidationError(f"n must be >= 1, got {n}")
        best: list[tuple[int, str]] = []
        scan_best(query, self._flat_prepared, self._flat_entries, n, best)
        return [(entry, d) for d, entry in best]


def build_index(entries: list[str]) -> MatchIndex:
    return MatchIndex(entries)


def top_n_matches(query: str, index: MatchIndex, n: int) -> list[tuple[str, int]]:
    return index.top_n(query, n)


def filter_biasing_list(
    hypothesis_text: str,
    entries: list[str],
    common: CommonWordSet,
    params: FilterParams | None = None,
    index: MatchIndex | None = None,
    use_linear: bool = False,
) -> FilterOutput:
    """Select the biasing entries most relevant to one hypothesis.

    Every segment contributes its top-N nearest entries; an entry keeps its
    minimum distance over all segments (first such segment in enumeration
    order wins the attribution). Output is ordered by (distance, word) and
    optionally cut by a distance cap and a size cap.
    """
    params = params or FilterParams()
    if index is None:
        index = build_index(entries)
    tokens = sot.tokenize_with_markers(hypothesis_text)
    runs = remove_common(tokens, common)
    best: dict[str, tuple[int, str]] = {}
    for run_i, run in enumerate(runs):
        for seg in enumerate_segments(run, params.max_span, run_i):
            query = seg.joined
            ranked = (
                index.top_n_linear(query, params.top_n)
                if use_linear
                else index.top_n(query, params.top_n)
            )
            for entry, d in ranked:
                cur = best.get(entry)
                if cur is None or d < cur[0]:
                    best[entry] = (d, query)
    matches = [
        FilterMatch(word=entry, distance=d, segment=seg_text)
        for entry, (d, seg_text) in best.items()
        if params.distance_cap is None or d <= params.distance_cap
    ]
    matches.sort(key=lambda m: (m.distance, m.word))
    if params.output_cap is not None:
        matches = matches[: params.output_cap]
    return FilterOutput(matches=matches)
