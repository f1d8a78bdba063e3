"""Prompt strings for the baseline, biasing and anti-context conditions.

The two instruction literals are fixed; only the word slot of the biasing
template varies. Words go into the slot joined by ", " and the slot is
capped (default 100 words, truncating from the tail, so the best-ranked
words survive when the input comes pre-ordered from the filter).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from biasforge.errors import ValidationError
from biasforge.rng import Rng

BASELINE = "baseline"
BIASING = "biasing"
ANTI_CONTEXT = "anti_context"

BASELINE_TEXT = "Transcribe speech to text."
BIASING_PREFIX = (
    "Use the rare words provided to improve the accuracy of ASR if they are relevant. "
    "The rare words are "
)
DEFAULT_CAP = 100


@dataclass
class PromptText:
    condition: str
    text: str
    inserted_words: list[str] = field(default_factory=list)
    empty_slot: bool = False


def baseline_prompt() -> PromptText:
    return PromptText(condition=BASELINE, text=BASELINE_TEXT)


def biasing_prompt(words: list[str], cap: int = DEFAULT_CAP) -> PromptText:
    """Biasing template with the first ``cap`` words in the slot."""
    if cap < 0:
        raise ValidationError(f"cap must be >= 0, got {cap}")
    inserted = list(words[:cap])
    text = BIASING_PREFIX + ", ".join(inserted) + "."
    return PromptText(
        condition=BIASING,
        text=text,
        inserted_words=inserted,
        empty_slot=not inserted,
    )


def anti_context_prompt(
    targets: list[str],
    distractor_pool: list[str],
    seed: int,
    words: list[str] | None = None,
    cap: int = DEFAULT_CAP,
) -> PromptText:
    """Biasing prompt with every target swapped for a fresh distractor.

    ``words`` is the list the biasing prompt would have inserted; it
    defaults to the targets themselves. Replacements are sampled without
    replacement from the pool minus targets minus words already present,
    deterministically per seed, so the slot keeps its word count and gains
    no duplicates.
    """
    if words is None:
        words = list(targets)
    target_set = set(targets)
    n_replace = sum(1 for w in words if w in target_set)
    exclude = target_set | set(words)
    pool = [w for w in distractor_pool if w not in exclude]
    if len(pool) < n_replace:
        raise ValidationError(
            f"anti-context needs {n_replace} replacement distractors, pool has {len(pool)}"
        )
    replacements = iter(Rng(seed).sample(pool, n_replace))
    swapped = [next(replacements) if w in target_set else w for w in words]
    prompt = biasing_prompt(swapped, cap)
    prompt.condition = ANTI_CONTEXT
    return prompt
