from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biasforge import sot
from biasforge.errors import ValidationError

tokens_st = st.lists(st.text(alphabet="ABCXYZ", min_size=1, max_size=6), min_size=1, max_size=6)


def seg(speaker, t, text):
    return sot.SpeakerSegment(speaker_id=speaker, tokens=text.split(), start_time=t)


def test_fifo_order():
    text = sot.serialize_sot([seg("spkB", 1.2, "WORLD"), seg("spkA", 0.0, "HELLO THERE")])
    assert text == "HELLO THERE <sc> WORLD"


def test_single_segment_no_marker():
    assert sot.serialize_sot([seg("a", 0.0, "HELLO")]) == "HELLO"


def test_three_segments_two_markers():
    text = sot.serialize_sot([seg("a", 0.0, "A"), seg("b", 1.0, "B"), seg("c", 2.0, "C")])
    assert sot.marker_count(text) == 2


def test_tie_breaks_by_speaker_id():
    text = sot.serialize_sot([seg("spk2", 0.0, "B"), seg("spk1", 0.0, "A")])
    assert text == "A <sc> B"


def test_serialize_rejects_empty_list():
    with pytest.raises(ValidationError):
        sot.serialize_sot([])


def test_serialize_rejects_missing_start_time():
    with pytest.raises(ValidationError):
        sot.serialize_sot([sot.SpeakerSegment("a", ["X"], None)])


def test_serialize_rejects_empty_segment():
    with pytest.raises(ValidationError):
        sot.serialize_sot([sot.SpeakerSegment("a", [], 0.0)])


def test_parse_basic():
    parsed = sot.parse_sot("HELLO <sc> WORLD")
    assert parsed.segments == [["HELLO"], ["WORLD"]]
    assert not parsed.malformed


def test_parse_no_marker():
    parsed = sot.parse_sot("HELLO")
    assert parsed.segments == [["HELLO"]]
    assert not parsed.malformed


def test_parse_degenerate_markers_flagged():
    parsed = sot.parse_sot("<sc> HELLO <sc>")
    assert parsed.segments == [["HELLO"]]
    assert parsed.malformed


def test_parse_empty_text():
    parsed = sot.parse_sot("")
    assert parsed.segments == []
    assert not parsed.malformed


def test_parse_normalizes_sides():
    parsed = sot.parse_sot("hello there!<sc>world.")
    assert parsed.segments == [["HELLO", "THERE"], ["WORLD"]]


def test_flatten_policies():
    assert sot.flatten_for_scoring("A <sc> B") == ["A", "B"]
    assert sot.flatten_for_scoring("A <sc> B", sot.MARKER_KEEP) == ["A", "<sc>", "B"]
    assert sot.flatten_for_scoring("") == []


def test_flatten_rejects_unknown_policy():
    with pytest.raises(ValidationError):
        sot.flatten_for_scoring("A", "both")


def test_tokenize_with_markers_preserves_count():
    toks = sot.tokenize_with_markers("A <sc> <sc> B")
    assert toks == ["A", "<sc>", "<sc>", "B"]


@given(st.lists(tokens_st, min_size=1, max_size=4))
@settings(max_examples=150, deadline=None)
def test_parse_recovers_serialized_segments(segment_tokens):
    segments = [
        sot.SpeakerSegment(f"spk{i}", toks, float(i)) for i, toks in enumerate(segment_tokens)
    ]
    text = sot.serialize_sot(segments)
    parsed = sot.parse_sot(text)
    assert parsed.segments == segment_tokens
    assert not parsed.malformed
    assert sot.marker_count(text) == len(segment_tokens) - 1
