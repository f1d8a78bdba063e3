"""Canonical tokenization and the common-word registry.

Every module normalizes text through here so that references, hypotheses,
word lists and frequency tables all agree on what a word is: NFC-normalized,
uppercased, whitespace-split, with punctuation stripped from the edges of
each token but apostrophes and hyphens kept inside ("IT'S",
"STATE-OF-THE-ART").
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from biasforge.errors import ValidationError

DEFAULT_COMMON_K = 5000


def normalize_word(word: str) -> str:
    """Normalize a single token; may return an empty string."""
    w = unicodedata.normalize("NFC", word).upper()
    start, end = 0, len(w)
    while start < end and not w[start].isalnum():
        start += 1
    while end > start and not w[end - 1].isalnum():
        end -= 1
    return w[start:end]


def normalize_tokenize(text: str) -> list[str]:
    """Split text into normalized tokens, dropping anything left empty.

    Speaker-change markers are not understood here; callers with SOT text
    extract them first (see ``sot``). Idempotent on its own output.
    """
    return [t for t in (normalize_word(w) for w in text.split()) if t]


def normalize_phrase(text: str) -> str:
    """Normalize a (possibly multi-word) list entry to single-spaced form."""
    return " ".join(normalize_tokenize(text))


def count_words(token_lists: Iterable[Iterable[str]]) -> dict[str, int]:
    """Frequency table over already-normalized token sequences."""
    counts: dict[str, int] = {}
    for tokens in token_lists:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
    return counts


@dataclass(frozen=True)
class CommonWordSet:
    """The K highest-ranked words, used by the filter's pruning step."""

    ranked: tuple[str, ...]
    k: int
    members: frozenset[str] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.ranked))

    def __contains__(self, word: str) -> bool:
        return word in self.members

    def __len__(self) -> int:
        return len(self.ranked)


def build_common_set(
    source: Mapping[str, int] | Iterable[str], k: int = DEFAULT_COMMON_K
) -> CommonWordSet:
    """Top-k words from a frequency table or an already-ranked word list.

    Frequency ties break lexicographically so the set is deterministic for
    any input ordering. A ranked list is trusted as-is (most frequent first,
    duplicates collapsed to their first position).
    """
    if k <= 0:
        raise ValidationError(f"common-set size must be positive, got {k}")
    if isinstance(source, Mapping):
        ranked = sorted(source, key=lambda w: (-source[w], w))
    else:
        seen = set()
        ranked = []
        for w in source:
            if w not in seen:
                seen.add(w)
                ranked.append(w)
    return CommonWordSet(ranked=tuple(ranked[:k]), k=k)


def is_common(word: str, common: CommonWordSet) -> bool:
    return word in common
