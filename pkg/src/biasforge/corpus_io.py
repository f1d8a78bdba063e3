"""Readers and writers for every persistent artifact.

Formats are deliberately boring: manifests are UTF-8 JSON objects one per
line (keys ``id``, ``reference``, optional ``hypothesis`` and ``tags``;
unknown keys survive a round trip), word lists are one entry per line,
frequency tables are ``word<TAB>count``, and score reports are a single
JSON document whose schema belongs to ``scoring``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, TYPE_CHECKING

from biasforge.errors import ManifestParseError, ValidationError
from biasforge.text_norm import normalize_phrase

if TYPE_CHECKING:
    from biasforge.scoring import CorpusReport

WORD_LIST_SOURCES = frozenset({"full_rare", "common", "per_utterance", "lecture"})

_RESERVED_KEYS = ("id", "reference", "hypothesis", "tags")


@dataclass
class UtteranceRecord:
    """One evaluation unit: reference transcript plus optional first pass."""

    id: str
    reference: str
    hypothesis: str | None = None
    tags: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass
class WordList:
    entries: list[str]
    source: str

    def __post_init__(self):
        if self.source not in WORD_LIST_SOURCES:
            raise ValidationError(
                f"unknown word-list source {self.source!r}; expected one of "
                f"{sorted(WORD_LIST_SOURCES)}"
            )


def _parse_manifest_line(raw: str, line_no: int) -> UtteranceRecord:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"invalid JSON ({exc.msg})", line_no) from exc
    if not isinstance(obj, dict):
        raise ManifestParseError("expected a JSON object", line_no)
    rec_id = obj.get("id")
    if not isinstance(rec_id, str) or not rec_id:
        raise ManifestParseError("missing or empty 'id'", line_no)
    reference = obj.get("reference")
    if not isinstance(reference, str) or not reference:
        raise ManifestParseError("missing or empty 'reference'", line_no)
    hypothesis = obj.get("hypothesis")
    if hypothesis is not None and not isinstance(hypothesis, str):
        raise ManifestParseError("'hypothesis' must be a string", line_no)
    tags = obj.get("tags") or {}
    if not isinstance(tags, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in tags.items()
    ):
        raise ManifestParseError("'tags' must map strings to strings", line_no)
    extra = {k: v for k, v in obj.items() if k not in _RESERVED_KEYS}
    return UtteranceRecord(
        id=rec_id, reference=reference, hypothesis=hypothesis, tags=tags, extra=extra
    )


def iter_manifest(stream: IO[str]) -> Iterator[UtteranceRecord]:
    """Stream records without loading the whole manifest; ids are checked
    unique across everything yielded so far."""
    seen: set[str] = set()
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        record = _parse_manifest_line(raw, line_no)
        if record.id in seen:
            raise ValidationError(f"duplicate utterance id {record.id!r} (line {line_no})")
        seen.add(record.id)
        yield record


def read_manifest(stream: IO[str]) -> list[UtteranceRecord]:
    return list(iter_manifest(stream))


def manifest_line(record: UtteranceRecord) -> str:
    """Canonical single-line form: fixed key order, extras sorted."""
    obj: dict = {"id": record.id, "reference": record.reference}
    if record.hypothesis is not None:
        obj["hypothesis"] = record.hypothesis
    if record.tags:
        obj["tags"] = record.tags
    for key in sorted(record.extra):
        obj[key] = record.extra[key]
    return json.dumps(obj, ensure_ascii=False)


def write_manifest(records: Iterable[UtteranceRecord], stream: IO[str]) -> None:
    for record in records:
        stream.write(manifest_line(record) + "\n")


def read_word_list(stream: IO[str], expected_source: str = "full_rare") -> WordList:
    """One entry per line, normalized, first occurrence wins.

    A full rare-word list must come out non-empty; the other sources may be
    empty (a lecture with no usable slides is a real case).
    """
    entries: list[str] = []
    seen: set[str] = set()
    for raw in stream:
        entry = normalize_phrase(raw)
        if not entry or entry in seen:
            continue
        seen.add(entry)
        entries.append(entry)
    if expected_source == "full_rare" and not entries:
        raise ValidationError("full rare-word list is empty after normalization")
    return WordList(entries=entries, source=expected_source)


def write_word_list(words: Iterable[str], stream: IO[str]) -> None:
    for word in words:
        stream.write(word + "\n")


def read_freq_table(stream: IO[str]) -> dict[str, int]:
    """``word<TAB>count`` per line; collided normalizations sum up."""
    counts: dict[str, int] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"line {line_no}: expected 'word<TAB>count', got {line!r}")
        word = normalize_phrase(parts[0])
        try:
            count = int(parts[1])
        except ValueError as exc:
            raise ValidationError(f"line {line_no}: count {parts[1]!r} is not an integer") from exc
        if count < 0:
            raise ValidationError(f"line {line_no}: negative count for {word!r}")
        if word:
            counts[word] = counts.get(word, 0) + count
    return counts


def write_freq_table(counts: dict[str, int], stream: IO[str]) -> None:
    for word in sorted(counts, key=lambda w: (-counts[w], w)):
        stream.write(f"{word}\t{counts[word]}\n")


def write_report(report: "CorpusReport", stream: IO[str]) -> None:
    """Deterministic JSON serialization; reloading yields an equal report."""
    from biasforge.scoring import report_to_dict

    json.dump(report_to_dict(report), stream, indent=2, sort_keys=True, ensure_ascii=False)
    stream.write("\n")


def read_report(stream: IO[str]) -> "CorpusReport":
    from biasforge.scoring import report_from_dict

    return report_from_dict(json.load(stream))


def write_jsonl(objs: Iterable[dict], stream: IO[str]) -> None:
    for obj in objs:
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_jsonl(stream: IO[str]) -> list[dict]:
    out = []
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            out.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ManifestParseError(f"invalid JSON ({exc.msg})", line_no) from exc
    return out


def load_path(path: str | Path, reader, *args, **kwargs):
    """Open a path and apply a stream reader, adding path context to errors."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            return reader(fh, *args, **kwargs)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def dump_path(path: str | Path, writer, payload, *args, **kwargs) -> None:
    """Write a payload through a stream writer, adding path context to errors."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            writer(payload, fh, *args, **kwargs)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc
