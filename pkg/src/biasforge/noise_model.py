"""Synthetic first-pass hypotheses via seeded reference corruption.

Models the error shapes a coarse first-pass decoder produces on rare words:
a corrupted word receives 1..max_char_edits character edits, and a word
that took two or more edits may additionally split into two tokens at a
random internal position (half the time), which is exactly the case the
multi-token segment matching exists for. Common and rare words corrupt with
separate probabilities, speaker-change markers are never touched, and every
draw derives from (seed, utterance id), so corpora regenerate bit-identically
in any processing order.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace as dc_replace
from typing import Iterable

from biasforge import sot
from biasforge.corpus_io import UtteranceRecord
from biasforge.errors import ValidationError
from biasforge.rng import Rng, derive_seed
from biasforge.text_norm import CommonWordSet

SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"
TRANSPOSE = "transpose"

# Transposing two adjacent characters costs 2 under plain Levenshtein, so it
# charges 2 against the edit budget; the bound dist(corrupted, original)
# <= max_char_edits then holds for every unsplit word.
_OP_COST = {SUBSTITUTE: 1, DELETE: 1, INSERT: 1, TRANSPOSE: 2}

DEFAULT_ALPHABET = tuple(string.ascii_uppercase)


def _default_char_ops() -> dict[str, float]:
    return {SUBSTITUTE: 0.5, DELETE: 0.2, INSERT: 0.2, TRANSPOSE: 0.1}


@dataclass
class NoiseSpec:
    p_rare_corrupt: float = 0.0
    p_common_corrupt: float = 0.0
    char_ops: dict[str, float] = field(default_factory=_default_char_ops)
    max_char_edits: int = 2
    p_word_delete: float = 0.0
    p_word_insert: float = 0.0
    split: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("p_rare_corrupt", "p_common_corrupt", "p_word_delete", "p_word_insert"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {p}")
        if self.max_char_edits < 1:
            raise ValidationError(f"max_char_edits must be >= 1, got {self.max_char_edits}")
        unknown = set(self.char_ops) - set(_OP_COST)
        if unknown:
            raise ValidationError(f"unknown char ops: {sorted(unknown)}")
        if any(w < 0 for w in self.char_ops.values()) or sum(self.char_ops.values()) <= 0:
            raise ValidationError("char_ops weights must be non-negative and sum > 0")


def _weighted_op(rng: Rng, weights: dict[str, float], word: str, budget: int) -> str | None:
    eligible = {}
    for op, w in weights.items():
        if w <= 0 or _OP_COST[op] > budget:
            continue
        if op in (DELETE, TRANSPOSE) and len(word) < 2:
            continue
        if op == TRANSPOSE and all(word[i] == word[i + 1] for i in range(len(word) - 1)):
            continue
        eligible[op] = w
    if not eligible:
        return None
    total = sum(eligible.values())
    pick = rng.random() * total
    acc = 0.0
    for op in (SUBSTITUTE, DELETE, INSERT, TRANSPOSE):
        if op not in eligible:
            continue
        acc += eligible[op]
        if pick < acc:
            return op
    return next(reversed(eligible))


def _apply_edit(rng: Rng, word: str, op: str, alphabet: tuple[str, ...]) -> str:
    if op == SUBSTITUTE:
        pos = rng.randbelow(len(word))
        pool = [c for c in alphabet if c != word[pos]]
        if not pool:
            return word
        return word[:pos] + rng.choice(pool) + word[pos + 1 :]
    if op == DELETE:
        pos = rng.randbelow(len(word))
        return word[:pos] + word[pos + 1 :]
    if op == INSERT:
        pos = rng.randbelow(len(word) + 1)
        return word[:pos] + rng.choice(list(alphabet)) + word[pos:]
    # transpose: swap an adjacent unequal pair
    positions = [i for i in range(len(word) - 1) if word[i] != word[i + 1]]
    pos = positions[rng.randbelow(len(positions))]
    return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]


def _corrupt_word(
    rng: Rng, word: str, spec: NoiseSpec, alphabet: tuple[str, ...]
) -> list[str]:
    """One reference word -> zero-edit, edited, or edited-and-split tokens."""
    n_edits = 1 + rng.randbelow(spec.max_char_edits)
    corrupted = word
    budget = n_edits
    while budget > 0 and corrupted:
        op = _weighted_op(rng, spec.char_ops, corrupted, budget)
        if op is None:
            break
        corrupted = _apply_edit(rng, corrupted, op, alphabet)
        budget -= _OP_COST[op]
    if not corrupted:
        return []
    if spec.split and n_edits >= 2 and len(corrupted) >= 2 and rng.random() < 0.5:
        pos = 1 + rng.randbelow(len(corrupted) - 1)
        return [corrupted[:pos], corrupted[pos:]]
    return [corrupted]


def corpus_alphabet(records: Iterable[UtteranceRecord]) -> tuple[str, ...]:
    """Sorted characters of all normalized reference tokens."""
    chars: set[str] = set()
    for record in records:
        for tok in sot.flatten_for_scoring(record.reference):
            chars.update(tok)
    return tuple(sorted(chars)) or DEFAULT_ALPHABET


def corrupt_utterance(
    reference_sot: str,
    common: CommonWordSet,
    spec: NoiseSpec,
    utt_id: str = "",
    alphabet: tuple[str, ...] = DEFAULT_ALPHABET,
) -> str:
    """Corrupt one reference into a synthetic hypothesis.

    Marker count is preserved and a segment never loses its last word, so
    the output stays a scoreable transcript.
    """
    rng = Rng(derive_seed(spec.seed, "noise", utt_id))
    tokens = sot.tokenize_with_markers(reference_sot)

    segments: list[list[str]] = [[]]
    for tok in tokens:
        if tok == sot.SPEAKER_CHANGE:
            segments.append([])
        else:
            segments[-1].append(tok)

    out_segments: list[list[str]] = []
    for seg in segments:
        out: list[str] = []
        for pos, word in enumerate(seg):
            remaining_after = len(seg) - pos - 1
            if rng.random() < spec.p_word_delete and (out or remaining_after > 0):
                pass
            else:
                p = spec.p_common_corrupt if word in common else spec.p_rare_corrupt
                if p > 0 and rng.random() < p:
                    out.extend(_corrupt_word(rng, word, spec, alphabet))
                else:
                    out.append(word)
            if spec.p_word_insert > 0 and rng.random() < spec.p_word_insert:
                length = 3 + rng.randbelow(6)
                out.append("".join(rng.choice(list(alphabet)) for _ in range(length)))
        out_segments.append(out)
    return f" {sot.SPEAKER_CHANGE} ".join(" ".join(seg) for seg in out_segments)


def corrupt_corpus(
    records: list[UtteranceRecord],
    common: CommonWordSet,
    spec: NoiseSpec,
    force: bool = False,
    alphabet: tuple[str, ...] | None = None,
) -> list[UtteranceRecord]:
    """Fill the hypothesis field of every record, touching nothing else."""
    if alphabet is None:
        alphabet = corpus_alphabet(records)
    out = []
    for record in records:
        if record.hypothesis is not None and not force:
            raise ValidationError(
                f"record {record.id!r} already has a hypothesis (use force to overwrite)"
            )
        hyp = corrupt_utterance(record.reference, common, spec, record.id, alphabet)
        out.append(dc_replace(record, hypothesis=hyp))
    return out
