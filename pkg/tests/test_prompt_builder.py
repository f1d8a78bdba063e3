from __future__ import annotations

import pytest

from biasforge.errors import ValidationError
from biasforge.prompt_builder import (
    ANTI_CONTEXT,
    BASELINE,
    BIASING,
    anti_context_prompt,
    baseline_prompt,
    biasing_prompt,
)


def test_baseline_literal():
    prompt = baseline_prompt()
    assert prompt.text == "Transcribe speech to text."
    assert prompt.condition == BASELINE
    assert prompt.inserted_words == []


def test_baseline_is_stable():
    assert baseline_prompt() == baseline_prompt()


def test_biasing_single_word():
    prompt = biasing_prompt(["STEVE"])
    assert prompt.text == (
        "Use the rare words provided to improve the accuracy of ASR if they are "
        "relevant. The rare words are STEVE."
    )
    assert prompt.condition == BIASING
    assert prompt.inserted_words == ["STEVE"]
    assert not prompt.empty_slot


def test_biasing_cap_truncates_tail():
    words = [f"W{i:03d}" for i in range(150)]
    prompt = biasing_prompt(words, cap=100)
    assert prompt.inserted_words == words[:100]
    assert prompt.text.endswith("W099.")
    assert "W100" not in prompt.text


def test_biasing_empty_slot_flagged():
    prompt = biasing_prompt([])
    assert prompt.empty_slot
    assert prompt.text.endswith("The rare words are .")


def test_biasing_fixed_prefix_invariant():
    prefix = biasing_prompt(["A"]).text.rsplit("A.", 1)[0]
    for words in (["X"], ["X", "Y"], [f"W{i}" for i in range(30)]):
        text = biasing_prompt(words).text
        assert text.startswith(prefix)
        assert text == prefix + ", ".join(words) + "."


def test_anti_replaces_every_target():
    prompt = anti_context_prompt(["X"], ["Y", "Z"], seed=4)
    assert prompt.condition == ANTI_CONTEXT
    assert len(prompt.inserted_words) == 1
    assert prompt.inserted_words[0] in {"Y", "Z"}
    assert "X" not in prompt.inserted_words


def test_anti_without_targets_keeps_words():
    distractors = [f"D{i:02d}" for i in range(100)]
    prompt = anti_context_prompt([], ["POOL1", "POOL2"], seed=1, words=distractors)
    biased = biasing_prompt(distractors)
    assert prompt.text == biased.text
    assert prompt.inserted_words == biased.inserted_words


def test_anti_deterministic():
    pool = [f"P{i:02d}" for i in range(50)]
    a = anti_context_prompt(["T1", "T2"], pool, seed=9, words=["T1", "KEEP", "T2"])
    b = anti_context_prompt(["T1", "T2"], pool, seed=9, words=["T1", "KEEP", "T2"])
    assert a == b
    assert a.inserted_words[1] == "KEEP"
    assert len(a.inserted_words) == 3


def test_anti_slot_size_matches_biasing():
    pool = [f"P{i:02d}" for i in range(50)]
    words = ["T1", "KEEP", "T2", "ALSO"]
    anti = anti_context_prompt(["T1", "T2"], pool, seed=2, words=words)
    assert len(anti.inserted_words) == len(biasing_prompt(words).inserted_words)


def test_anti_insufficient_pool():
    with pytest.raises(ValidationError):
        anti_context_prompt(["A", "B"], ["ONLY"], seed=0)


def test_anti_avoids_duplicates_with_kept_words():
    pool = ["KEEP", "FRESH"]
    prompt = anti_context_prompt(["T"], pool, seed=0, words=["T", "KEEP"])
    assert prompt.inserted_words == ["FRESH", "KEEP"]
