"""Word-level alignment and WER / B-WER / U-WER computation.

Alignment is Levenshtein-optimal at word level. Because several optimal
alignments usually exist and the biased/unbiased attribution depends on
which one is chosen, traceback resolves ties with a fixed preference
(match, then substitute, then delete, then insert, reading from the end of
the sequences). Reports are therefore bit-reproducible.

Attribution: substitutions and deletions belong to the biased class when
the reference word is in the biasing set; insertions when the inserted
hypothesis word is. Corpus aggregation pools raw counts, never averages
per-utterance rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from biasforge import sot
from biasforge.bias_catalog import CoverageStat
from biasforge.corpus_io import UtteranceRecord

MATCH = "match"
SUB = "sub"
DEL = "del"
INS = "ins"


class Op(NamedTuple):
    kind: str
    ref: str | None
    hyp: str | None


@dataclass
class ErrorCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def add(self, other: "ErrorCounts") -> None:
        self.substitutions += other.substitutions
        self.deletions += other.deletions
        self.insertions += other.insertions


@dataclass
class AlignmentReport:
    n_ref: int
    n_ref_biased: int
    errors_total: ErrorCounts
    errors_biased: ErrorCounts
    errors_unbiased: ErrorCounts
    coverage: CoverageStat | None = None

    @property
    def n_ref_unbiased(self) -> int:
        return self.n_ref - self.n_ref_biased

    @property
    def wer(self) -> float | None:
        return None if self.n_ref == 0 else self.errors_total.total / self.n_ref

    @property
    def bwer(self) -> float | None:
        return None if self.n_ref_biased == 0 else self.errors_biased.total / self.n_ref_biased

    @property
    def uwer(self) -> float | None:
        den = self.n_ref_unbiased
        return None if den == 0 else self.errors_unbiased.total / den


@dataclass
class UtteranceScore:
    id: str
    report: AlignmentReport
    ops: list[Op] | None = None


@dataclass
class CorpusReport:
    corpus: AlignmentReport
    n_utterances: int
    skipped: int
    utterances: list[UtteranceScore] = field(default_factory=list)


def align(ref_tokens: list[str], hyp_tokens: list[str]) -> list[Op]:
    """Minimal-cost word alignment with deterministic traceback."""
    n, m = len(ref_tokens), len(hyp_tokens)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        ri = ref_tokens[i - 1]
        row, prev = dp[i], dp[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ri == hyp_tokens[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best

    ops: list[Op] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref_tokens[i - 1] == hyp_tokens[j - 1]:
            ops.append(Op(MATCH, ref_tokens[i - 1], hyp_tokens[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            ops.append(Op(SUB, ref_tokens[i - 1], hyp_tokens[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(Op(DEL, ref_tokens[i - 1], None))
            i -= 1
        else:
            ops.append(Op(INS, None, hyp_tokens[j - 1]))
            j -= 1
    ops.reverse()
    return ops


def score(
    ops: list[Op],
    biasing_set: set[str],
    coverage: CoverageStat | None = None,
) -> AlignmentReport:
    """Attribute each error op to the biased or unbiased class."""
    n_ref = 0
    n_ref_biased = 0
    total = ErrorCounts()
    biased = ErrorCounts()
    unbiased = ErrorCounts()
    for op in ops:
        if op.ref is not None:
            n_ref += 1
            if op.ref in biasing_set:
                n_ref_biased += 1
        if op.kind == MATCH:
            continue
        if op.kind == SUB:
            total.substitutions += 1
            bucket = biased if op.ref in biasing_set else unbiased
            bucket.substitutions += 1
        elif op.kind == DEL:
            total.deletions += 1
            bucket = biased if op.ref in biasing_set else unbiased
            bucket.deletions += 1
        else:
            total.insertions += 1
            bucket = biased if op.hyp in biasing_set else unbiased
            bucket.insertions += 1
    return AlignmentReport(
        n_ref=n_ref,
        n_ref_biased=n_ref_biased,
        errors_total=total,
        errors_biased=biased,
        errors_unbiased=unbiased,
        coverage=coverage,
    )


def score_utterance(
    reference: str,
    hypothesis: str,
    biasing_set: set[str],
    marker_policy: str = sot.MARKER_DROP,
    coverage: CoverageStat | None = None,
) -> tuple[AlignmentReport, list[Op]]:
    ref_tokens = sot.flatten_for_scoring(reference, marker_policy)
    hyp_tokens = sot.flatten_for_scoring(hypothesis, marker_policy)
    ops = align(ref_tokens, hyp_tokens)
    return score(ops, biasing_set, coverage), ops


def score_corpus(
    records: Iterable[UtteranceRecord],
    biasing_sets: Mapping[str, set[str]] | None = None,
    hypotheses: Mapping[str, str] | None = None,
    coverage_by_id: Mapping[str, CoverageStat] | None = None,
    marker_policy: str = sot.MARKER_DROP,
    emit_ops: bool = False,
) -> CorpusReport:
    """Pool error and reference counts across a corpus.

    ``hypotheses`` overrides each record's own first pass (used to score
    corrected output). Records that end up with no hypothesis are skipped
    and counted, not failed.
    """
    pooled = AlignmentReport(0, 0, ErrorCounts(), ErrorCounts(), ErrorCounts())
    cov_targets = 0
    cov_present = 0
    has_cov = False
    utterances: list[UtteranceScore] = []
    n_total = 0
    skipped = 0
    for record in records:
        n_total += 1
        hyp = hypotheses.get(record.id) if hypotheses else record.hypothesis
        if hypotheses and hyp is None:
            hyp = record.hypothesis
        if hyp is None:
            skipped += 1
            continue
        bset = biasing_sets.get(record.id, set()) if biasing_sets else set()
        cov = coverage_by_id.get(record.id) if coverage_by_id else None
        report, ops = score_utterance(record.reference, hyp, bset, marker_policy, cov)
        pooled.n_ref += report.n_ref
        pooled.n_ref_biased += report.n_ref_biased
        pooled.errors_total.add(report.errors_total)
        pooled.errors_biased.add(report.errors_biased)
        pooled.errors_unbiased.add(report.errors_unbiased)
        if cov is not None:
            has_cov = True
            cov_targets += cov.n_targets
            cov_present += cov.n_targets_present
        utterances.append(
            UtteranceScore(id=record.id, report=report, ops=ops if emit_ops else None)
        )
    if has_cov:
        pooled.coverage = CoverageStat(n_targets=cov_targets, n_targets_present=cov_present)
    return CorpusReport(
        corpus=pooled, n_utterances=n_total, skipped=skipped, utterances=utterances
    )


def _counts_to_dict(c: ErrorCounts) -> dict:
    return {
        "substitutions": c.substitutions,
        "deletions": c.deletions,
        "insertions": c.insertions,
        "total": c.total,
    }


def _counts_from_dict(d: dict) -> ErrorCounts:
    return ErrorCounts(
        substitutions=d["substitutions"],
        deletions=d["deletions"],
        insertions=d["insertions"],
    )


def _coverage_to_dict(cov: CoverageStat | None) -> dict | None:
    if cov is None:
        return None
    return {
        "n_targets": cov.n_targets,
        "n_targets_present": cov.n_targets_present,
        "coverage": cov.coverage,
    }


def _coverage_from_dict(d: dict | None) -> CoverageStat | None:
    if d is None:
        return None
    return CoverageStat(n_targets=d["n_targets"], n_targets_present=d["n_targets_present"])


def _alignment_to_dict(r: AlignmentReport) -> dict:
    return {
        "n_ref": r.n_ref,
        "n_ref_biased": r.n_ref_biased,
        "n_ref_unbiased": r.n_ref_unbiased,
        "errors_total": _counts_to_dict(r.errors_total),
        "errors_biased": _counts_to_dict(r.errors_biased),
        "errors_unbiased": _counts_to_dict(r.errors_unbiased),
        "wer": r.wer,
        "bwer": r.bwer,
        "uwer": r.uwer,
        "coverage": _coverage_to_dict(r.coverage),
    }


def _alignment_from_dict(d: dict) -> AlignmentReport:
    return AlignmentReport(
        n_ref=d["n_ref"],
        n_ref_biased=d["n_ref_biased"],
        errors_total=_counts_from_dict(d["errors_total"]),
        errors_biased=_counts_from_dict(d["errors_biased"]),
        errors_unbiased=_counts_from_dict(d["errors_unbiased"]),
        coverage=_coverage_from_dict(d.get("coverage")),
    )


def report_to_dict(report: CorpusReport) -> dict:
    corpus = _alignment_to_dict(report.corpus)
    corpus["n_utterances"] = report.n_utterances
    corpus["skipped"] = report.skipped
    utterances = []
    for us in report.utterances:
        entry = {"id": us.id, **_alignment_to_dict(us.report)}
        if us.ops is not None:
            entry["ops"] = [[op.kind, op.ref, op.hyp] for op in us.ops]
        utterances.append(entry)
    return {"corpus": corpus, "utterances": utterances}


def report_from_dict(data: dict) -> CorpusReport:
    corpus = data["corpus"]
    utterances = []
    for entry in data["utterances"]:
        ops = None
        if "ops" in entry:
            ops = [Op(kind, ref, hyp) for kind, ref, hyp in entry["ops"]]
        utterances.append(
            UtteranceScore(id=entry["id"], report=_alignment_from_dict(entry), ops=ops)
        )
    return CorpusReport(
        corpus=_alignment_from_dict(corpus),
        n_utterances=corpus["n_utterances"],
        skipped=corpus["skipped"],
        utterances=utterances,
    )
