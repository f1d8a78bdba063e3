"""Biasing-list construction and coverage measurement.

Targets are the reference words that appear in the full rare-word list;
distractors are rare words sampled from the rest of that list to stress the
filter's selectivity. Sampling is seeded and uses partial Fisher-Yates, so
for one seed the 1,000-distractor set is a prefix of the 2,000- and
5,000-distractor sets. Sweeps over distractor counts therefore grow lists
monotonically, never reshuffle them.
"""

from __future__ import annotations

from dataclasses import dataclass

from biasforge.corpus_io import WordList
from biasforge.errors import ValidationError
from biasforge.rng import Rng

TARGET = "target"
DISTRACTOR = "distractor"


@dataclass
class BiasingList:
    """Ordered unique entries with per-entry provenance, targets first."""

    entries: list[str]
    provenance: list[str]
    seed: int

    @property
    def targets(self) -> list[str]:
        return [w for w, p in zip(self.entries, self.provenance) if p == TARGET]

    @property
    def distractors(self) -> list[str]:
        return [w for w, p in zip(self.entries, self.provenance) if p == DISTRACTOR]


@dataclass
class CoverageStat:
    n_targets: int
    n_targets_present: int

    @property
    def coverage(self) -> float | None:
        if self.n_targets == 0:
            return None
        return self.n_targets_present / self.n_targets


def extract_targets(reference_tokens: list[str], full_rare_list: WordList) -> list[str]:
    """Reference words (or phrases, matched as contiguous units) found in the
    full list, unique, in first-occurrence order."""
    if not full_rare_list.entries:
        raise ValidationError("full rare-word list must be non-empty")
    members = set(full_rare_list.entries)
    max_len = max((e.count(" ") + 1 for e in members), default=1)
    found: list[str] = []
    seen: set[str] = set()
    n = len(reference_tokens)
    for i in range(n):
        limit = min(max_len, n - i)
        for span in range(1, limit + 1):
            candidate = " ".join(reference_tokens[i : i + span])
            if candidate in members and candidate not in seen:
                seen.add(candidate)
                found.append(candidate)
    return found


def sample_distractors(
    full_rare_list: WordList, targets: list[str], n: int, seed: int
) -> list[str]:
    """n rare words sampled uniformly without replacement, excluding targets.

    Deterministic per seed, and prefix-consistent: the same seed with a
    larger n extends the smaller sample rather than replacing it.
    """
    if n < 0:
        raise ValidationError(f"distractor count must be >= 0, got {n}")
    if n == 0:
        return []
    target_set = set(targets)
    pool = [w for w in full_rare_list.entries if w not in target_set]
    if len(pool) < n:
        raise ValidationError(
            f"cannot sample {n} distractors from a pool of {len(pool)} "
            f"(short by {n - len(pool)})"
        )
    return Rng(seed).sample(pool, n)


def classify_rare_ami(
    word: str,
    full_rare_list: WordList,
    freq_table: dict[str, int],
    threshold: int = 100,
) -> bool:
    """Rare iff the word is in the full list or occurs fewer than
    ``threshold`` times (missing words count as zero)."""
    if word in set(full_rare_list.entries):
        return True
    return freq_table.get(word, 0) < threshold


def merge_lists(lists: list[WordList], source: str | None = None) -> WordList:
    """Union preserving first-occurrence order across the inputs."""
    if not lists:
        raise ValidationError("need at least one list to merge")
    entries: list[str] = []
    seen: set[str] = set()
    for wl in lists:
        for entry in wl.entries:
            if entry not in seen:
                seen.add(entry)
                entries.append(entry)
    return WordList(entries=entries, source=source or lists[0].source)


def coverage(targets: list[str], candidate_list: list[str]) -> CoverageStat:
    candidates = set(candidate_list)
    present = sum(1 for t in set(targets) if t in candidates)
    return CoverageStat(n_targets=len(set(targets)), n_targets_present=present)


def extract_rare_targets(
    reference_tokens: list[str],
    full_rare_list: WordList,
    freq_table: dict[str, int],
    threshold: int = 100,
) -> list[str]:
    """Reference words classified rare by list membership or low frequency,
    unique, in first-occurrence order. The meeting-corpus flavour of target
    extraction, where the word list alone is not exhaustive."""
    found: list[str] = []
    seen: set[str] = set()
    for word in reference_tokens:
        if word in seen:
            continue
        seen.add(word)
        if classify_rare_ami(word, full_rare_list, freq_table, threshold):
            found.append(word)
    return found


def build_biasing_list(
    reference_tokens: list[str],
    full_rare_list: WordList,
    n_distractors: int,
    seed: int,
    cap: int | None = None,
    shuffle: bool = False,
    freq_table: dict[str, int] | None = None,
    freq_threshold: int = 100,
) -> BiasingList:
    """Per-utterance list: targets in reference order, then sampled
    distractors. A cap truncates distractors first, then targets.

    With a frequency table, targets come from rarity classification
    (membership or sub-threshold count) instead of membership alone.
    """
    if freq_table is not None:
        targets = extract_rare_targets(
            reference_tokens, full_rare_list, freq_table, freq_threshold
        )
    else:
        targets = extract_targets(reference_tokens, full_rare_list)
    distractors = sample_distractors(full_rare_list, targets, n_distractors, seed)
    if cap is not None:
        if cap < 0:
            raise ValidationError(f"cap must be >= 0, got {cap}")
        keep_d = max(0, min(len(distractors), cap - len(targets)))
        distractors = distractors[:keep_d]
        targets = targets[:cap]
    entries = targets + distractors
    provenance = [TARGET] * len(targets) + [DISTRACTOR] * len(distractors)
    if shuffle:
        order = list(range(len(entries)))
        Rng(seed ^ 0x5B1A5ED).shuffle(order)
        entries = [entries[i] for i in order]
        provenance = [provenance[i] for i in order]
    return BiasingList(entries=entries, provenance=provenance, seed=seed)
