"""Pipeline orchestration and the ``biasforge`` command-line interface.

Each stage is a subcommand over line-delimited artifacts, and ``run``
chains the same stage functions end to end, so a full experiment is
reproducible from one seed and inspectable at every intermediate file.
Randomness never flows between stages: every stage derives its own
generator from (seed, stage name, utterance id).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from biasforge import bench as bench_mod
from biasforge import corrector, noise_model, prompt_builder, scoring, sot
from biasforge.bias_catalog import BiasingList, build_biasing_list, coverage
from biasforge.corpus_io import (
    UtteranceRecord,
    WordList,
    dump_path,
    load_path,
    read_jsonl,
    read_manifest,
    read_freq_table,
    read_word_list,
    write_jsonl,
    write_manifest,
    write_report,
)
from biasforge.errors import BiasforgeError
from biasforge.filter_engine import (
    FilterMatch,
    FilterOutput,
    FilterParams,
    build_index,
    filter_biasing_list,
)
from biasforge.rng import derive_seed
from biasforge.text_norm import CommonWordSet, build_common_set

API_KEY_ENV = "BIASFORGE_API_KEY"


# ---------------------------------------------------------------------------
# stage functions (shared by the subcommands and `run`)


def load_common(
    common_path: Path | None,
    freq_path: Path | None,
    k: int,
) -> CommonWordSet:
    if common_path is not None:
        ranked = load_path(common_path, read_word_list, "common")
        return build_common_set(ranked.entries, k)
    if freq_path is not None:
        counts = load_path(freq_path, read_freq_table)
        return build_common_set(counts, k)
    raise BiasforgeError("need a ranked common-word file or a frequency table")


def stage_simulate(
    records: list[UtteranceRecord],
    common: CommonWordSet,
    spec: noise_model.NoiseSpec,
    force: bool,
) -> list[UtteranceRecord]:
    return noise_model.corrupt_corpus(records, common, spec, force=force)


def stage_build_lists(
    records: list[UtteranceRecord],
    full_list: WordList,
    n_distractors: int,
    seed: int,
    cap: int | None,
    shuffle: bool,
    freq_table: dict[str, int] | None = None,
    freq_threshold: int = 100,
) -> dict[str, BiasingList]:
    lists = {}
    for record in records:
        ref_tokens = sot.flatten_for_scoring(record.reference)
        lists[record.id] = build_biasing_list(
            ref_tokens,
            full_list,
            n_distractors,
            derive_seed(seed, "distractors", record.id),
            cap=cap,
            shuffle=shuffle,
            freq_table=freq_table,
            freq_threshold=freq_threshold,
        )
    return lists


def stage_filter(
    records: list[UtteranceRecord],
    entries_by_id: dict[str, list[str]] | None,
    global_entries: list[str] | None,
    common: CommonWordSet,
    params: FilterParams,
    threads: int = 1,
    use_linear: bool = False,
) -> tuple[dict[str, FilterOutput], int]:
    """Filter each utterance against its own list (or one shared list).

    Records without a hypothesis are skipped and counted. Parallelism never
    changes results: outputs are keyed by id and re-read in record order.
    """
    shared_index = build_index(global_entries) if global_entries is not None else None

    def worker(record: UtteranceRecord) -> FilterOutput:
        if entries_by_id is not None:
            entries = entries_by_id.get(record.id, [])
            index = None
        else:
            entries = shared_index.entries
            index = shared_index
        return filter_biasing_list(
            record.hypothesis, entries, common, params, index=index, use_linear=use_linear
        )

    todo = [(r.id, r) for r in records if r.hypothesis is not None]
    skipped = len(records) - len(todo)
    results = corrector.run_bounded(worker, todo, max_concurrency=threads)
    out: dict[str, FilterOutput] = {}
    for rec_id, result in results.items():
        if isinstance(result, Exception):
            raise result
        out[rec_id] = result
    return out, skipped


def stage_prompt(
    records: list[UtteranceRecord],
    condition: str,
    filtered_by_id: dict[str, list[str]],
    targets_by_id: dict[str, list[str]],
    full_entries: list[str],
    seed: int,
    cap: int,
) -> dict[str, prompt_builder.PromptText]:
    prompts = {}
    for record in records:
        if condition == prompt_builder.BASELINE:
            prompts[record.id] = prompt_builder.baseline_prompt()
        elif condition == prompt_builder.BIASING:
            prompts[record.id] = prompt_builder.biasing_prompt(
                filtered_by_id.get(record.id, []), cap
            )
        else:
            prompts[record.id] = prompt_builder.anti_context_prompt(
                targets_by_id.get(record.id, []),
                full_entries,
                derive_seed(seed, "anti", record.id),
                words=filtered_by_id.get(record.id, []),
                cap=cap,
            )
    return prompts


def stage_correct(
    records: list[UtteranceRecord],
    prompts_by_id: dict[str, prompt_builder.PromptText],
    mode: str,
    common: CommonWordSet,
    d_max: int,
    max_span: int | None,
    endpoint: corrector.EndpointConfig | None,
    threads: int = 1,
) -> tuple[dict[str, corrector.CorrectionResponse], dict[str, str]]:
    """Returns (responses by id, failure reasons by id)."""

    def worker(record: UtteranceRecord) -> corrector.CorrectionResponse:
        prompt = prompts_by_id[record.id]
        if mode == "mock":
            return corrector.correct_mock(
                record.hypothesis, prompt.inserted_words, common, d_max, max_span
            )
        request = corrector.CorrectionRequest(
            system_text=prompt.text,
            user_text=record.hypothesis,
            model_id=endpoint.model_id,
        )
        return corrector.correct_remote(request, endpoint)

    todo = [(r.id, r) for r in records if r.hypothesis is not None and r.id in prompts_by_id]
    concurrency = threads if mode == "mock" else (endpoint.max_concurrency if endpoint else 1)
    results = corrector.run_bounded(worker, todo, max_concurrency=concurrency)
    responses: dict[str, corrector.CorrectionResponse] = {}
    failures: dict[str, str] = {}
    for rec_id, result in results.items():
        if isinstance(result, Exception):
            if isinstance(result, BiasforgeError):
                failures[rec_id] = f"{type(result).__name__}: {result}"
            else:
                raise result
        else:
            responses[rec_id] = result
    return responses, failures


def stage_score(
    records: list[UtteranceRecord],
    lists_by_id: dict[str, BiasingList] | None,
    corrections: dict[str, str] | None,
    coverage_by_id: dict | None,
    marker_policy: str,
    emit_ops: bool,
) -> scoring.CorpusReport:
    biasing_sets = None
    if lists_by_id is not None:
        biasing_sets = {rec_id: set(bl.entries) for rec_id, bl in lists_by_id.items()}
    return scoring.score_corpus(
        records,
        biasing_sets=biasing_sets,
        hypotheses=corrections,
        coverage_by_id=coverage_by_id,
        marker_policy=marker_policy,
        emit_ops=emit_ops,
    )


# ---------------------------------------------------------------------------
# artifact shapes


def lists_to_rows(lists: dict[str, BiasingList], records: list[UtteranceRecord]) -> list[dict]:
    return [
        {
            "id": r.id,
            "targets": lists[r.id].targets,
            "distractors": lists[r.id].distractors,
        }
        for r in records
        if r.id in lists
    ]


def rows_to_lists(rows: list[dict]) -> dict[str, BiasingList]:
    out = {}
    for row in rows:
        targets = list(row["targets"])
        distractors = list(row["distractors"])
        out[row["id"]] = BiasingList(
            entries=targets + distractors,
            provenance=["target"] * len(targets) + ["distractor"] * len(distractors),
            seed=0,
        )
    return out


def filtered_to_rows(
    filtered: dict[str, FilterOutput], records: list[UtteranceRecord]
) -> list[dict]:
    return [
        {
            "id": r.id,
            "filtered_entries": [
                {"word": m.word, "distance": m.distance, "segment": m.segment}
                for m in filtered[r.id].matches
            ],
        }
        for r in records
        if r.id in filtered
    ]


def rows_to_filtered(rows: list[dict]) -> dict[str, FilterOutput]:
    return {
        row["id"]: FilterOutput(
            matches=[
                FilterMatch(word=e["word"], distance=e["distance"], segment=e["segment"])
                for e in row["filtered_entries"]
            ]
        )
        for row in rows
    }


def prompts_to_rows(
    prompts: dict[str, prompt_builder.PromptText], records: list[UtteranceRecord]
) -> list[dict]:
    return [
        {
            "id": r.id,
            "condition": prompts[r.id].condition,
            "text": prompts[r.id].text,
            "inserted_words": prompts[r.id].inserted_words,
        }
        for r in records
        if r.id in prompts
    ]


def corrections_to_rows(
    responses: dict[str, corrector.CorrectionResponse],
    failures: dict[str, str],
    records: list[UtteranceRecord],
) -> list[dict]:
    rows = []
    for r in records:
        if r.id in responses:
            resp = responses[r.id]
            rows.append(
                {
                    "id": r.id,
                    "corrected_text": resp.corrected_text,
                    "latency_ms": resp.latency_ms,
                    "status": "ok",
                }
            )
        elif r.id in failures:
            rows.append(
                {"id": r.id, "corrected_text": None, "latency_ms": None,
                 "status": f"error: {failures[r.id]}"}
            )
    return rows


def rows_to_corrections(rows: list[dict]) -> dict[str, str]:
    return {
        row["id"]: row["corrected_text"]
        for row in rows
        if row.get("status") == "ok" and row.get("corrected_text") is not None
    }


# ---------------------------------------------------------------------------
# CLI plumbing


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _endpoint_from(cfg: dict, url, model, timeout_s, max_retries, max_concurrency):
    gateway = cfg.get("gateway", {})
    url = url or gateway.get("endpoint_url")
    if not url:
        return None
    return corrector.EndpointConfig(
        endpoint_url=url,
        model_id=model or gateway.get("model_id", ""),
        timeout_s=timeout_s if timeout_s is not None else gateway.get("timeout_s", 30.0),
        max_retries=max_retries if max_retries is not None else gateway.get("max_retries", 3),
        max_concurrency=(
            max_concurrency
            if max_concurrency is not None
            else gateway.get("max_concurrency", 4)
        ),
        api_key=os.environ.get(API_KEY_ENV),
    )


class _Ctx:
    def __init__(self, seed: int, threads: int, out_dir: Path, config: dict):
        self.seed = seed
        self.threads = threads
        self.out_dir = out_dir
        self.config = config


@click.group()
@click.option("--seed", type=int, default=None, help="Top-level seed; stages derive from it.")
@click.option("--threads", type=int, default=None, help="Utterance-level parallelism.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON config file; flags override its values.")
@click.pass_context
def main(ctx, seed, threads, out_dir, config_path):
    """Text-side contextual multi-talker ASR pipeline."""
    cfg = _load_config(config_path)
    ctx.obj = _Ctx(
        seed=seed if seed is not None else cfg.get("seed", 0),
        threads=threads if threads is not None else cfg.get("threads", 1),
        out_dir=out_dir if out_dir is not None else Path(cfg.get("out_dir", ".")),
        config=cfg,
    )


def _fail(stage: str, exc: Exception) -> None:
    raise click.ClickException(f"[{stage}] {exc}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--common", "common_path", type=click.Path(exists=True, path_type=Path))
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path))
@click.option("--common-k", type=int, default=5000, show_default=True)
@click.option("--p-rare", type=float, default=0.6, show_default=True)
@click.option("--p-common", type=float, default=0.0, show_default=True)
@click.option("--max-edits", type=int, default=2, show_default=True)
@click.option("--p-word-delete", type=float, default=0.0, show_default=True)
@click.option("--p-word-insert", type=float, default=0.0, show_default=True)
@click.option("--no-split", is_flag=True, help="Disable splitting of multi-edit words.")
@click.option("--force", is_flag=True, help="Overwrite existing hypotheses.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def simulate(obj, manifest, common_path, freq_path, common_k, p_rare, p_common,
             max_edits, p_word_delete, p_word_insert, no_split, force, out):
    """Generate synthetic first-pass hypotheses from references."""
    try:
        records = load_path(manifest, read_manifest)
        common = load_common(common_path, freq_path, common_k)
        spec = noise_model.NoiseSpec(
            p_rare_corrupt=p_rare,
            p_common_corrupt=p_common,
            max_char_edits=max_edits,
            p_word_delete=p_word_delete,
            p_word_insert=p_word_insert,
            split=not no_split,
            seed=obj.seed,
        )
        noisy = stage_simulate(records, common, spec, force)
        dump_path(out, write_manifest, noisy)
    except BiasforgeError as exc:
        _fail("simulate", exc)
    click.echo(f"simulate: wrote {len(records)} records to {out}")


@main.command("build-lists")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--full-list", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--distractors", type=int, default=1000, show_default=True)
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path),
              help="Classify targets by rarity (list membership or low count).")
@click.option("--freq-threshold", type=int, default=100, show_default=True,
              help="Counts below this are rare when --freq-table is given.")
@click.option("--cap", type=int, default=None)
@click.option("--shuffle", is_flag=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def build_lists(obj, manifest, full_list, distractors, freq_path, freq_threshold,
                cap, shuffle, out):
    """Per-utterance biasing lists: targets plus sampled distractors."""
    try:
        records = load_path(manifest, read_manifest)
        full = load_path(full_list, read_word_list, "full_rare")
        freq_table = load_path(freq_path, read_freq_table) if freq_path else None
        lists = stage_build_lists(records, full, distractors, obj.seed, cap, shuffle,
                                  freq_table, freq_threshold)
        dump_path(out, write_jsonl, lists_to_rows(lists, records))
    except BiasforgeError as exc:
        _fail("build-lists", exc)
    click.echo(f"build-lists: wrote {len(lists)} lists to {out}")


@main.command("filter")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--list", "list_path", type=click.Path(exists=True, path_type=Path),
              help="One shared biasing-list file for every utterance.")
@click.option("--lists", "lists_path", type=click.Path(exists=True, path_type=Path),
              help="Per-utterance lists from build-lists (overrides --list).")
@click.option("--common", "common_path", type=click.Path(exists=True, path_type=Path))
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path))
@click.option("--common-k", type=int, default=5000, show_default=True)
@click.option("--top-n", type=int, default=10, show_default=True)
@click.option("--max-span", type=int, default=3, show_default=True)
@click.option("--distance-cap", type=int, default=None)
@click.option("--output-cap", type=int, default=None)
@click.option("--linear", is_flag=True, help="Use the flat scan instead of the index.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def filter_cmd(obj, manifest, list_path, lists_path, common_path, freq_path, common_k,
               top_n, max_span, distance_cap, output_cap, linear, out):
    """Reduce biasing lists to the entries relevant to each hypothesis."""
    try:
        records = load_path(manifest, read_manifest)
        common = load_common(common_path, freq_path, common_k)
        params = FilterParams(top_n=top_n, max_span=max_span, common_k=common_k,
                              distance_cap=distance_cap, output_cap=output_cap)
        entries_by_id = None
        global_entries = None
        if lists_path is not None:
            entries_by_id = {
                rec_id: bl.entries
                for rec_id, bl in rows_to_lists(load_path(lists_path, read_jsonl)).items()
            }
        elif list_path is not None:
            global_entries = load_path(list_path, read_word_list, "full_rare").entries
        else:
            raise BiasforgeError("need --lists or --list")
        filtered, skipped = stage_filter(
            records, entries_by_id, global_entries, common, params, obj.threads, linear
        )
        dump_path(out, write_jsonl, filtered_to_rows(filtered, records))
    except BiasforgeError as exc:
        _fail("filter", exc)
    click.echo(f"filter: wrote {len(filtered)} records to {out} ({skipped} without hypothesis)")


@main.command("prompt")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--condition", type=click.Choice(["baseline", "biasing", "anti"]),
              default="biasing", show_default=True)
@click.option("--filtered", "filtered_path", type=click.Path(exists=True, path_type=Path))
@click.option("--lists", "lists_path", type=click.Path(exists=True, path_type=Path))
@click.option("--full-list", "full_list_path", type=click.Path(exists=True, path_type=Path))
@click.option("--cap", type=int, default=100, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def prompt_cmd(obj, manifest, condition, filtered_path, lists_path, full_list_path, cap, out):
    """Emit the instruction prompt for each utterance."""
    try:
        records = load_path(manifest, read_manifest)
        cond = {"anti": prompt_builder.ANTI_CONTEXT}.get(condition, condition)
        filtered_by_id: dict[str, list[str]] = {}
        targets_by_id: dict[str, list[str]] = {}
        full_entries: list[str] = []
        if cond != prompt_builder.BASELINE:
            if filtered_path is None:
                raise BiasforgeError("biasing and anti conditions need --filtered")
            filtered_by_id = {
                rec_id: fo.entries
                for rec_id, fo in rows_to_filtered(load_path(filtered_path, read_jsonl)).items()
            }
        if cond == prompt_builder.ANTI_CONTEXT:
            if lists_path is None or full_list_path is None:
                raise BiasforgeError("anti condition needs --lists and --full-list")
            targets_by_id = {
                rec_id: bl.targets
                for rec_id, bl in rows_to_lists(load_path(lists_path, read_jsonl)).items()
            }
            full_entries = load_path(full_list_path, read_word_list, "full_rare").entries
        prompts = stage_prompt(records, cond, filtered_by_id, targets_by_id,
                               full_entries, obj.seed, cap)
        dump_path(out, write_jsonl, prompts_to_rows(prompts, records))
    except BiasforgeError as exc:
        _fail("prompt", exc)
    click.echo(f"prompt: wrote {len(prompts)} prompts to {out}")


@main.command("correct")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--prompts", "prompts_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice(["mock", "remote"]), default="mock",
              show_default=True)
@click.option("--common", "common_path", type=click.Path(exists=True, path_type=Path))
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path))
@click.option("--common-k", type=int, default=5000, show_default=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--max-span", type=int, default=3, show_default=True)
@click.option("--endpoint-url", default=None)
@click.option("--model", default=None)
@click.option("--timeout-s", type=float, default=None)
@click.option("--max-retries", type=int, default=None)
@click.option("--max-concurrency", type=int, default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def correct_cmd(obj, manifest, prompts_path, mode, common_path, freq_path, common_k,
                d_max, max_span, endpoint_url, model, timeout_s, max_retries,
                max_concurrency, out):
    """Send hypotheses through the corrector (offline mock or remote LLM)."""
    try:
        records = load_path(manifest, read_manifest)
        prompt_rows = load_path(prompts_path, read_jsonl)
        prompts_by_id = {
            row["id"]: prompt_builder.PromptText(
                condition=row["condition"], text=row["text"],
                inserted_words=list(row["inserted_words"]),
            )
            for row in prompt_rows
        }
        common = (
            load_common(common_path, freq_path, common_k)
            if (common_path or freq_path)
            else build_common_set(["THE"], 1)
        )
        endpoint = _endpoint_from(obj.config, endpoint_url, model, timeout_s,
                                  max_retries, max_concurrency)
        if mode == "remote" and endpoint is None:
            raise BiasforgeError("remote mode needs --endpoint-url or a config gateway section")
        responses, failures = stage_correct(
            records, prompts_by_id, mode, common, d_max, max_span, endpoint, obj.threads
        )
        dump_path(out, write_jsonl, corrections_to_rows(responses, failures, records))
    except BiasforgeError as exc:
        _fail("correct", exc)
    msg = f"correct: wrote {len(responses)} corrections to {out}"
    if failures:
        msg += f" ({len(failures)} failed, left uncorrected)"
    click.echo(msg)


@main.command("score")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corrections", "corrections_path", type=click.Path(exists=True, path_type=Path))
@click.option("--lists", "lists_path", type=click.Path(exists=True, path_type=Path))
@click.option("--filtered", "filtered_path", type=click.Path(exists=True, path_type=Path),
              help="Attach filtered-list coverage to the report.")
@click.option("--marker-policy", type=click.Choice([sot.MARKER_DROP, sot.MARKER_KEEP]),
              default=sot.MARKER_DROP, show_default=True)
@click.option("--emit-ops", is_flag=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def score_cmd(obj, manifest, corrections_path, lists_path, filtered_path,
              marker_policy, emit_ops, out):
    """Score hypotheses (or corrections) against references."""
    try:
        records = load_path(manifest, read_manifest)
        lists_by_id = None
        if lists_path is not None:
            lists_by_id = rows_to_lists(load_path(lists_path, read_jsonl))
        corrections = None
        if corrections_path is not None:
            corrections = rows_to_corrections(load_path(corrections_path, read_jsonl))
        coverage_by_id = None
        if filtered_path is not None and lists_by_id is not None:
            filtered = rows_to_filtered(load_path(filtered_path, read_jsonl))
            coverage_by_id = {
                rec_id: coverage(lists_by_id[rec_id].targets, fo.entries)
                for rec_id, fo in filtered.items()
                if rec_id in lists_by_id
            }
        report = stage_score(records, lists_by_id, corrections, coverage_by_id,
                             marker_policy, emit_ops)
        dump_path(out, write_report, report)
    except BiasforgeError as exc:
        _fail("score", exc)
    wer = report.corpus.wer
    bwer = report.corpus.bwer
    click.echo(
        f"score: {report.n_utterances} utterances ({report.skipped} skipped), "
        f"WER={wer if wer is None else f'{wer:.4f}'} "
        f"B-WER={bwer if bwer is None else f'{bwer:.4f}'} -> {out}"
    )


@main.command("run")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--full-list", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--common", "common_path", type=click.Path(exists=True, path_type=Path))
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path))
@click.option("--common-k", type=int, default=5000, show_default=True)
@click.option("--simulate", "do_simulate", is_flag=True,
              help="Generate hypotheses first (references only in the manifest).")
@click.option("--p-rare", type=float, default=0.6, show_default=True)
@click.option("--p-common", type=float, default=0.0, show_default=True)
@click.option("--max-edits", type=int, default=2, show_default=True)
@click.option("--force", is_flag=True)
@click.option("--distractors", type=int, default=1000, show_default=True)
@click.option("--cap", type=int, default=None, help="Biasing-list size cap.")
@click.option("--condition", type=click.Choice(["baseline", "biasing", "anti"]),
              default="biasing", show_default=True)
@click.option("--corrector", "corrector_mode", type=click.Choice(["mock", "remote", "none"]),
              default="mock", show_default=True)
@click.option("--top-n", "top_ns", type=int, multiple=True,
              help="Repeatable; one report per value (default 10).")
@click.option("--max-span", type=int, default=3, show_default=True)
@click.option("--prompt-cap", type=int, default=100, show_default=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--endpoint-url", default=None)
@click.option("--model", default=None)
@click.option("--timeout-s", type=float, default=None)
@click.option("--max-retries", type=int, default=None)
@click.option("--max-concurrency", type=int, default=None)
@click.pass_obj
def run_cmd(obj, manifest, full_list, common_path, freq_path, common_k, do_simulate,
            p_rare, p_common, max_edits, force, distractors, cap, condition,
            corrector_mode, top_ns, max_span, prompt_cap, d_max, endpoint_url,
            model, timeout_s, max_retries, max_concurrency):
    """Full pipeline: simulate? -> build-lists -> filter -> prompt -> correct -> score."""
    out_dir = obj.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    top_ns = list(top_ns) or [10]
    cond = {"anti": prompt_builder.ANTI_CONTEXT}.get(condition, condition)

    stage = "setup"
    try:
        records = load_path(manifest, read_manifest)
        common = load_common(common_path, freq_path, common_k)
        full = load_path(full_list, read_word_list, "full_rare")

        if do_simulate:
            stage = "simulate"
            spec = noise_model.NoiseSpec(
                p_rare_corrupt=p_rare, p_common_corrupt=p_common,
                max_char_edits=max_edits, seed=obj.seed,
            )
            records = stage_simulate(records, common, spec, force)
        missing = sum(1 for r in records if r.hypothesis is None)
        if missing == len(records):
            raise BiasforgeError("no record has a hypothesis; pass --simulate or fill them in")
        dump_path(out_dir / "manifest_used.jsonl", write_manifest, records)

        stage = "build-lists"
        lists = stage_build_lists(records, full, distractors, obj.seed, cap, shuffle=False)
        dump_path(out_dir / "lists.jsonl", write_jsonl, lists_to_rows(lists, records))

        endpoint = _endpoint_from(obj.config, endpoint_url, model, timeout_s,
                                  max_retries, max_concurrency)
        if corrector_mode == "remote" and endpoint is None:
            raise BiasforgeError("remote corrector needs --endpoint-url or a config gateway section")

        summary: dict = {"seed": obj.seed, "condition": cond, "distractors": distractors,
                         "corrector": corrector_mode, "settings": []}
        for top_n in top_ns:
            setting_dir = out_dir if len(top_ns) == 1 else out_dir / f"top_n_{top_n}"
            setting_dir.mkdir(parents=True, exist_ok=True)
            params = FilterParams(top_n=top_n, max_span=max_span, common_k=common_k)

            stage = "filter"
            filtered: dict[str, FilterOutput] = {}
            coverage_by_id = None
            if cond != prompt_builder.BASELINE:
                entries_by_id = {rec_id: bl.entries for rec_id, bl in lists.items()}
                filtered, _ = stage_filter(records, entries_by_id, None, common,
                                           params, obj.threads)
                dump_path(setting_dir / "filtered.jsonl", write_jsonl,
                          filtered_to_rows(filtered, records))
                coverage_by_id = {
                    rec_id: coverage(lists[rec_id].targets, fo.entries)
                    for rec_id, fo in filtered.items()
                }

            stage = "prompt"
            prompts = stage_prompt(
                records, cond,
                {rec_id: fo.entries for rec_id, fo in filtered.items()},
                {rec_id: bl.targets for rec_id, bl in lists.items()},
                full.entries, obj.seed, prompt_cap,
            )
            dump_path(setting_dir / "prompts.jsonl", write_jsonl,
                      prompts_to_rows(prompts, records))

            stage = "correct"
            corrections: dict[str, str] = {}
            n_failures = 0
            if corrector_mode != "none":
                responses, failures = stage_correct(
                    records, prompts, corrector_mode, common, d_max, max_span,
                    endpoint, obj.threads,
                )
                n_failures = len(failures)
                dump_path(setting_dir / "corrections.jsonl", write_jsonl,
                          corrections_to_rows(responses, failures, records))
                corrections = {rec_id: resp.corrected_text
                               for rec_id, resp in responses.items()}

            stage = "score"
            report_raw = stage_score(records, lists, None, coverage_by_id,
                                     sot.MARKER_DROP, emit_ops=False)
            dump_path(setting_dir / "report_uncorrected.json", write_report, report_raw)
            report_fixed = report_raw
            if corrector_mode != "none":
                report_fixed = stage_score(records, lists, corrections, coverage_by_id,
                                           sot.MARKER_DROP, emit_ops=False)
                dump_path(setting_dir / "report_corrected.json", write_report, report_fixed)

            cov = report_fixed.corpus.coverage
            summary["settings"].append({
                "top_n": top_n,
                "dir": str(setting_dir.relative_to(out_dir)),
                "wer_uncorrected": report_raw.corpus.wer,
                "bwer_uncorrected": report_raw.corpus.bwer,
                "wer_corrected": report_fixed.corpus.wer if corrector_mode != "none" else None,
                "bwer_corrected": report_fixed.corpus.bwer if corrector_mode != "none" else None,
                "coverage": cov.coverage if cov is not None else None,
                "correction_failures": n_failures,
            })
        with (out_dir / "summary.json").open("w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BiasforgeError as exc:
        _fail(stage, exc)
    for setting in summary["settings"]:
        click.echo(
            f"run[top_n={setting['top_n']}]: "
            f"WER {setting['wer_uncorrected']:.4f} -> {setting['wer_corrected'] if setting['wer_corrected'] is None else round(setting['wer_corrected'], 4)}, "
            f"B-WER {setting['bwer_uncorrected']:.4f} -> {setting['bwer_corrected'] if setting['bwer_corrected'] is None else round(setting['bwer_corrected'], 4)}"
        )
    click.echo(f"run: summary at {out_dir / 'summary.json'}")


@main.command("bench")
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--list", "list_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--common", "common_path", type=click.Path(exists=True, path_type=Path))
@click.option("--freq-table", "freq_path", type=click.Path(exists=True, path_type=Path))
@click.option("--common-k", type=int, default=5000, show_default=True)
@click.option("--top-n", type=int, default=10, show_default=True)
@click.option("--max-span", type=int, default=3, show_default=True)
@click.option("--queries", "n_queries", type=int, default=1000, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.pass_obj
def bench_cmd(obj, manifest, list_path, common_path, freq_path, common_k, top_n,
              max_span, n_queries, out):
    """Filter latency percentiles plus index-vs-scan and kernel comparisons."""
    try:
        records = load_path(manifest, read_manifest)
        common = load_common(common_path, freq_path, common_k)
        entries = load_path(list_path, read_word_list, "full_rare").entries
        params = FilterParams(top_n=top_n, max_span=max_span, common_k=common_k)
        report = bench_mod.run_bench(records, entries, common, params, n_queries)
        if out is not None:
            with Path(out).open("w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2, sort_keys=True)
                fh.write("\n")
    except BiasforgeError as exc:
        _fail("bench", exc)
    filt = report["filter"]
    ivs = report["index_vs_scan"]
    click.echo(f"bench: backend={report['backend']} list={report['list_size']} entries")
    click.echo(f"bench: filter p50={filt['p50_ms']:.2f}ms p95={filt['p95_ms']:.2f}ms "
               f"over {filt['n_utterances']} utterances")
    click.echo(f"bench: index {ivs['indexed_ms']:.1f}ms vs scan {ivs['linear_ms']:.1f}ms "
               f"(speedup {ivs['speedup']:.2f}x{', ALARM' if ivs['alarm'] else ''})")
    kernels = report["kernels"]
    if "compiled_speedup" in kernels:
        click.echo(f"bench: compiled kernel {kernels['compiled_speedup']:.1f}x faster than pure")


if __name__ == "__main__":
    main()
