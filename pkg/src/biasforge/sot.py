"""Serialized multi-talker transcripts.

A serialized transcript concatenates per-speaker token sequences in
first-in-first-out order (ascending utterance start time) with the literal
marker ``<sc>`` between consecutive speakers. Parsing is deliberately
forgiving: hypothesis text produced by a model may carry dangling or
doubled markers, which are flagged rather than rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from biasforge.errors import ValidationError
from biasforge.text_norm import normalize_tokenize

SPEAKER_CHANGE = "<sc>"

MARKER_DROP = "drop"
MARKER_KEEP = "keep_as_token"

_MARKER_RE = re.compile(re.escape(SPEAKER_CHANGE))


@dataclass
class SpeakerSegment:
    speaker_id: str
    tokens: list[str]
    start_time: float | None = None


@dataclass
class ParsedSot:
    """Anonymous speaker segments recovered from serialized text."""

    segments: list[list[str]]
    malformed: bool = False


def serialize_sot(segments: list[SpeakerSegment]) -> str:
    """Join segments in FIFO order with the speaker-change marker.

    Ties on start time break by speaker_id so simultaneous starts stay
    deterministic. Every segment needs a start time and at least one token.
    """
    if not segments:
        raise ValidationError("cannot serialize an empty segment list")
    for seg in segments:
        if seg.start_time is None:
            raise ValidationError(f"segment {seg.speaker_id!r} has no start time")
        if not seg.tokens:
            raise ValidationError(f"segment {seg.speaker_id!r} has no tokens")
    ordered = sorted(segments, key=lambda s: (s.start_time, s.speaker_id))
    return f" {SPEAKER_CHANGE} ".join(" ".join(seg.tokens) for seg in ordered)


def parse_sot(text: str) -> ParsedSot:
    """Split serialized text on markers and normalize each side.

    Empty sides (leading, trailing or doubled markers) are dropped and flag
    the result as malformed. Text without markers or tokens parses to zero
    segments without a flag.
    """
    sides = _MARKER_RE.split(text)
    segments = []
    dropped_empty = False
    for side in sides:
        tokens = normalize_tokenize(side)
        if tokens:
            segments.append(tokens)
        else:
            dropped_empty = True
    malformed = dropped_empty and len(sides) > 1
    return ParsedSot(segments=segments, malformed=malformed)


def tokenize_with_markers(text: str) -> list[str]:
    """Normalized token stream with ``<sc>`` kept as a standalone token.

    Marker count is preserved exactly, including degenerate doubled or
    dangling markers, so downstream consumers can reason about positions.
    """
    sides = _MARKER_RE.split(text)
    out: list[str] = []
    for i, side in enumerate(sides):
        if i > 0:
            out.append(SPEAKER_CHANGE)
        out.extend(normalize_tokenize(side))
    return out


def flatten_for_scoring(text: str, marker_policy: str = MARKER_DROP) -> list[str]:
    """Token stream for alignment, with markers dropped or kept per policy."""
    if marker_policy not in (MARKER_DROP, MARKER_KEEP):
        raise ValidationError(f"unknown marker policy {marker_policy!r}")
    tokens = tokenize_with_markers(text)
    if marker_policy == MARKER_DROP:
        return [t for t in tokens if t != SPEAKER_CHANGE]
    return tokens


def marker_count(text: str) -> int:
    return len(_MARKER_RE.findall(text))
