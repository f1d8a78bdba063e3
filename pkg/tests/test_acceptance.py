"""Acceptance suite: one test per criterion, at the stated tolerance.

Each test prints one pass line (run with ``-s`` or ``-rA`` to see them) and
asserts its own runtime budget. Heavy assets (the 209.2K-entry list, the
500-utterance noisy corpus) are built once per module from fixed seeds.
"""

from __future__ import annotations

import json
import time

import pytest
from click.testing import CliRunner

from biasforge import noise_model, sot
from biasforge._kernels import BACKEND, levenshtein
from biasforge.bias_catalog import build_biasing_list, coverage, sample_distractors
from biasforge.cli import main
from biasforge.corpus_io import WordList, dump_path, write_manifest
from biasforge.corrector import correct_mock
from biasforge.filter_engine import FilterParams, build_index, filter_biasing_list
from biasforge.prompt_builder import baseline_prompt, biasing_prompt
from biasforge.rng import Rng, derive_seed
from biasforge.scoring import align, score
from biasforge.text_norm import build_common_set
from conftest import build_synthetic_corpus, make_vocab
from oracles import (
    oracle_attribution,
    oracle_levenshtein,
    oracle_top_n,
    preferred_alignment,
)

TOP_N = 10
MAX_SPAN = 3
NOISE_SEED = 1234
LIST_SEED = 4321


def report_pass(num: int, desc: str, elapsed: float, budget: float) -> None:
    print(f"[acceptance] criterion {num} PASS ({elapsed:.1f}s of {budget:.0f}s budget): {desc}")


# --- shared assets -----------------------------------------------------------


@pytest.fixture(scope="module")
def acc_common_vocab():
    return make_vocab(Rng(101), 300, "ABCDEFGHIJKLM")


@pytest.fixture(scope="module")
def acc_rare_vocab():
    return make_vocab(Rng(202), 9000, "NOPQRSTUVWXYZ")


@pytest.fixture(scope="module")
def acc_common(acc_common_vocab):
    return build_common_set(acc_common_vocab, k=len(acc_common_vocab))


@pytest.fixture(scope="module")
def acc_full(acc_rare_vocab):
    return WordList(entries=list(acc_rare_vocab), source="full_rare")


@pytest.fixture(scope="module")
def noisy_corpus(acc_common_vocab, acc_rare_vocab, acc_common):
    records = build_synthetic_corpus(
        500, seed=99, common_vocab=acc_common_vocab, rare_vocab=acc_rare_vocab, p_rare=0.45
    )
    spec = noise_model.NoiseSpec(
        p_rare_corrupt=0.6, max_char_edits=2, split=True, seed=NOISE_SEED
    )
    return noise_model.corrupt_corpus(records, acc_common, spec)


@pytest.fixture(scope="module")
def world_files(tmp_path_factory, noisy_corpus, acc_common_vocab, acc_rare_vocab):
    root = tmp_path_factory.mktemp("acceptance_world")
    manifest = root / "manifest_noisy.jsonl"
    dump_path(manifest, write_manifest, noisy_corpus)
    small = root / "manifest_small.jsonl"
    dump_path(small, write_manifest, noisy_corpus[:120])
    common = root / "common.txt"
    common.write_text("".join(w + "\n" for w in acc_common_vocab), encoding="utf-8")
    full = root / "full.txt"
    full.write_text("".join(w + "\n" for w in acc_rare_vocab), encoding="utf-8")
    return {"root": root, "manifest": manifest, "small": small, "common": common,
            "full": full}


def run_cli(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


# --- criterion 1: worked-example fidelity ------------------------------------


def test_criterion_1_worked_example(acc_rare_vocab):
    budget = 1.0
    start = time.monotonic()

    hypothesis = "MORE THAN THE SPEAKER CHARACE THSATION AS STEE"
    common = build_common_set(["MORE", "THAN", "THE", "SPEAKER", "AS"], k=5)
    full = WordList(
        entries=["CHARACTERISATION", "STEVE"] + list(acc_rare_vocab), source="full_rare"
    )
    distractors = sample_distractors(full, ["CHARACTERISATION", "STEVE"], 1000, seed=7)
    entries = ["CHARACTERISATION", "STEVE"] + distractors

    filtered = filter_biasing_list(
        hypothesis, entries, common, FilterParams(top_n=TOP_N, max_span=MAX_SPAN)
    )
    assert "CHARACTERISATION" in filtered.entries
    assert "STEVE" in filtered.entries

    corrected = correct_mock(hypothesis, filtered.entries, common, d_max=3)
    assert corrected.corrected_text == "MORE THAN THE SPEAKER CHARACTERISATION AS STEVE"

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(1, "filter keeps both targets; mock repairs the corrupted span",
                elapsed, budget)


# --- criterion 2: edit-distance oracle equivalence ---------------------------


def test_criterion_2_distance_oracle_equivalence():
    budget = 30.0
    start = time.monotonic()
    assert BACKEND == "compiled"

    rng = Rng(2024)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ'0123456789"
    for _ in range(100_000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randbelow(25)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randbelow(25)))
        assert levenshtein(a, b) == oracle_levenshtein(a, b)

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(2, "production distance equals naive DP on 100,000 pairs", elapsed, budget)


# --- criterion 3: index / brute-force equivalence at full scale --------------


def test_criterion_3_index_linear_equivalence():
    budget = 300.0
    start = time.monotonic()

    rng = Rng(42)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    seen: set[str] = set()
    entries: list[str] = []
    while len(entries) < 209_200:
        w = "".join(rng.choice(alphabet) for _ in range(4 + rng.randbelow(13)))
        if w not in seen:
            seen.add(w)
            entries.append(w)

    queries = []
    for _ in range(10_000):
        if rng.random() < 0.7:
            q = entries[rng.randbelow(len(entries))]
            for _ in range(1 + rng.randbelow(2)):
                pos = rng.randbelow(len(q))
                q = q[:pos] + rng.choice(alphabet) + q[pos + 1 :]
        else:
            q = "".join(rng.choice(alphabet) for _ in range(3 + rng.randbelow(16)))
        queries.append(q)

    index = build_index(entries)
    for i, q in enumerate(queries):
        indexed = index.top_n(q, TOP_N)
        linear = index.top_n_linear(q, TOP_N)
        assert indexed == linear, f"path divergence on query {i}: {q!r}"

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(3, "indexed and linear top-10 identical on 10,000 queries x 209.2K entries",
                elapsed, budget)

    # extra diligence beyond the criterion (hence untimed): a handful of
    # queries against the test suite's naive oracle, which costs seconds each
    # at this list size
    for q in queries[:: len(queries) // 8]:
        assert index.top_n(q, TOP_N) == oracle_top_n(q, entries, TOP_N)


# --- criterion 4: filter recall on the synthetic corpus ----------------------


def _oracle_segments(tokens, common):
    runs, current = [], []
    for tok in tokens:
        if tok == sot.SPEAKER_CHANGE or tok in common:
            if current:
                runs.append(current)
                current = []
        else:
            current.append(tok)
    if current:
        runs.append(current)
    segs = []
    for run in runs:
        for off in range(len(run)):
            for span in range(1, min(MAX_SPAN, len(run) - off) + 1):
                segs.append("".join(run[off : off + span]))
    return segs


def test_criterion_4_filter_recall(noisy_corpus, acc_common, acc_full):
    budget = 120.0
    start = time.monotonic()
    params = FilterParams(top_n=TOP_N, max_span=MAX_SPAN)

    n_targets_total = 0
    n_targets_found = 0
    for record in noisy_corpus:
        ref_tokens = sot.flatten_for_scoring(record.reference)
        bl = build_biasing_list(
            ref_tokens, acc_full, 1000, derive_seed(LIST_SEED, "distractors", record.id)
        )
        if not bl.targets:
            continue
        filtered = filter_biasing_list(record.hypothesis, bl.entries, acc_common, params)
        got = set(filtered.entries)
        segments = _oracle_segments(
            sot.tokenize_with_markers(record.hypothesis), acc_common.members
        )
        for target in bl.targets:
            n_targets_total += 1
            if target in got:
                n_targets_found += 1
                continue
            # The target is absent, so it must not satisfy the near-miss
            # condition for any segment: with the (distance, entry) ordering
            # the filter guarantees presence when at most top_n - 1 entries
            # rank ahead, where "ahead" is strictly closer or tied at the
            # same distance and lexicographically earlier.
            key = target.replace(" ", "")
            for seg in segments:
                d = oracle_levenshtein(seg, key)
                if d > 2:
                    continue
                ahead = 0
                for other in bl.entries:
                    if other == target:
                        continue
                    d_other = oracle_levenshtein(seg, other.replace(" ", ""))
                    if (d_other, other) < (d, target):
                        ahead += 1
                        if ahead >= TOP_N:
                            break
                assert ahead > TOP_N - 1, (
                    f"{record.id}: target {target} near segment {seg} (d={d}, "
                    f"{ahead} ranked ahead) missing from filter output"
                )

    recall = n_targets_found / n_targets_total
    assert n_targets_total > 900
    assert recall >= 0.95, f"recall {recall:.4f} below 0.95"

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(4, f"near-miss targets all present; overall recall {recall:.2%} >= 95%",
                elapsed, budget)


# --- criterion 5: coverage monotonicity and filtered size --------------------


def test_criterion_5_coverage_monotone_and_size(noisy_corpus, acc_common, acc_full):
    budget = 300.0
    start = time.monotonic()
    params = FilterParams(top_n=TOP_N, max_span=MAX_SPAN)

    mean_coverages = []
    mean_sizes = []
    for n_distractors in (1000, 2000, 5000):
        ratios = []
        sizes = []
        for record in noisy_corpus:
            ref_tokens = sot.flatten_for_scoring(record.reference)
            bl = build_biasing_list(
                ref_tokens, acc_full, n_distractors,
                derive_seed(LIST_SEED, "distractors", record.id),
            )
            filtered = filter_biasing_list(record.hypothesis, bl.entries, acc_common, params)
            sizes.append(len(filtered.entries))
            stat = coverage(bl.targets, filtered.entries)
            if stat.coverage is not None:
                ratios.append(stat.coverage)
        mean_coverages.append(sum(ratios) / len(ratios))
        mean_sizes.append(sum(sizes) / len(sizes))

    assert mean_coverages[0] >= mean_coverages[1] >= mean_coverages[2], mean_coverages
    assert all(size < 200 for size in mean_sizes), mean_sizes

    elapsed = time.monotonic() - start
    assert elapsed < budget
    cov_text = " >= ".join(f"{c:.4f}" for c in mean_coverages)
    report_pass(5, f"coverage {cov_text}; mean filtered sizes {[round(s, 1) for s in mean_sizes]} < 200",
                elapsed, budget)


# --- criterion 6: B-WER oracle equivalence -----------------------------------


def test_criterion_6_bwer_oracle_equivalence():
    budget = 60.0
    start = time.monotonic()

    rng = Rng(3030)
    vocab = ["A", "B", "C", "D", "E"]
    for _ in range(1000):
        ref = [vocab[rng.randbelow(5)] for _ in range(rng.randbelow(9))]
        hyp = [vocab[rng.randbelow(5)] for _ in range(rng.randbelow(9))]
        biasing = {w for w in vocab if rng.random() < 0.4}

        ops = align(ref, hyp)
        got = score(ops, biasing)
        expected_ops = preferred_alignment(ref, hyp)
        expected = oracle_attribution(expected_ops, biasing)

        n_errors = sum(1 for op in ops if op.kind != "match")
        assert n_errors == oracle_levenshtein(ref, hyp)  # WER numerator exact
        assert got.n_ref == expected["n_ref"]
        assert got.n_ref_biased == expected["n_ref_biased"]
        assert got.errors_total.total == expected["total"]
        assert got.errors_biased.total == expected["biased"]
        assert got.errors_unbiased.total == expected["unbiased"]

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(6, "WER and B-WER match exhaustive alignment enumeration on 1,000 instances",
                elapsed, budget)


# --- criterion 7: end-to-end improvement and anti-context --------------------


def test_criterion_7_end_to_end_improvement(world_files, tmp_path):
    budget = 180.0
    start = time.monotonic()

    base_args = ["--seed", str(LIST_SEED), "run",
                 "--manifest", str(world_files["manifest"]),
                 "--full-list", str(world_files["full"]),
                 "--common", str(world_files["common"]),
                 "--distractors", "1000", "--top-n", str(TOP_N), "--d-max", "2"]

    bias_dir = tmp_path / "biasing"
    run_cli(["--out-dir", str(bias_dir)] + base_args + ["--condition", "biasing"])
    anti_dir = tmp_path / "anti"
    run_cli(["--out-dir", str(anti_dir)] + base_args + ["--condition", "anti"])

    bias = json.loads((bias_dir / "summary.json").read_text())["settings"][0]
    anti = json.loads((anti_dir / "summary.json").read_text())["settings"][0]

    assert bias["bwer_corrected"] < bias["bwer_uncorrected"], bias
    # anti-context must not improve over the uncorrected baseline (0.5 points)
    assert anti["bwer_corrected"] >= anti["bwer_uncorrected"] - 0.005, anti

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(
        7,
        f"B-WER {bias['bwer_uncorrected']:.4f} -> {bias['bwer_corrected']:.4f} with biasing; "
        f"anti-context {anti['bwer_corrected']:.4f} gives no gain",
        elapsed, budget,
    )


# --- criterion 8: determinism across runs and thread counts ------------------


def test_criterion_8_determinism(world_files, tmp_path):
    budget = 120.0
    start = time.monotonic()

    digests = []
    for run_i, threads in enumerate(("1", "8", "1")):
        out_dir = tmp_path / f"det{run_i}"
        run_cli(["--seed", "77", "--threads", threads, "--out-dir", str(out_dir), "run",
                 "--manifest", str(world_files["small"]),
                 "--full-list", str(world_files["full"]),
                 "--common", str(world_files["common"]),
                 "--distractors", "500", "--top-n", str(TOP_N)])
        blob = b"".join(
            (out_dir / name).read_bytes()
            for name in ("report_uncorrected.json", "report_corrected.json",
                         "summary.json", "filtered.jsonl", "prompts.jsonl",
                         "corrections.jsonl", "lists.jsonl")
        )
        digests.append(blob)
    assert digests[0] == digests[1] == digests[2]

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(8, "reports byte-identical across reruns and across threads 1 vs 8",
                elapsed, budget)


# --- criterion 9: prompt fidelity --------------------------------------------


def test_criterion_9_prompt_fidelity():
    budget = 1.0
    start = time.monotonic()

    assert baseline_prompt().text == "Transcribe speech to text."
    single = biasing_prompt(["STEVE"])
    assert single.text == (
        "Use the rare words provided to improve the accuracy of ASR if they are "
        "relevant. The rare words are STEVE."
    )
    words = ["ALPHA", "BETA", "GAMMA"]
    multi = biasing_prompt(words)
    prefix = "Use the rare words provided to improve the accuracy of ASR if they are relevant. The rare words are "
    assert multi.text == prefix + ", ".join(words) + "."
    assert multi.text.startswith(prefix) and multi.text.endswith(".")

    elapsed = time.monotonic() - start
    assert elapsed < budget
    report_pass(9, "baseline and biasing literals exact outside the word slot",
                elapsed, budget)
