"""Correction gateway: a chat-completions client and an offline mock.

The remote path posts one request per utterance to any chat-completions
compatible endpoint (bearer token from ``BIASFORGE_API_KEY``), retrying
transient transport failures with exponential backoff. The mock path is a
deterministic stand-in that repairs the hypothesis with the filtered list
alone, so the whole pipeline runs and is testable offline.

The user message puts the hypothesis as the final paragraph, after a blank
line; stub servers in the tests rely on that framing.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, TypeVar

from biasforge import sot
from biasforge.errors import (
    GatewayAuthError,
    GatewayProtocolError,
    GatewayTimeoutError,
    GatewayTransportError,
    ValidationError,
)
from biasforge._kernels import prepare_keys, scan_best
from biasforge.filter_engine import enumerate_segments, remove_common
from biasforge.text_norm import CommonWordSet

USER_INSTRUCTION = "Correct the transcript below. Output only the corrected transcript."

DEFAULT_D_MAX = 2
_MAX_MOCK_ROUNDS = 64


@dataclass
class DecodeParams:
    temperature: float = 0.0
    max_output_tokens: int = 1024


@dataclass
class CorrectionRequest:
    system_text: str
    user_text: str
    model_id: str
    decode: DecodeParams = field(default_factory=DecodeParams)

    def __post_init__(self):
        if not self.user_text:
            raise ValidationError("correction request needs a non-empty hypothesis")
        if self.decode.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass
class CorrectionResponse:
    corrected_text: str
    latency_ms: int
    raw_status: dict = field(default_factory=dict)


@dataclass
class EndpointConfig:
    endpoint_url: str
    model_id: str = ""
    timeout_s: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4
    retry_backoff_s: float = 0.5
    api_key: str | None = None


def _request_body(request: CorrectionRequest) -> bytes:
    body = {
        "model": request.model_id,
        "messages": [
            {"role": "system", "content": request.system_text},
            {"role": "user", "content": f"{USER_INSTRUCTION}\n\n{request.user_text}"},
        ],
        "temperature": request.decode.temperature,
        "max_tokens": request.decode.max_output_tokens,
    }
    return json.dumps(body).encode("utf-8")


def _extract_content(payload: bytes) -> str:
    try:
        data = json.loads(payload.decode("utf-8"))
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise GatewayProtocolError(f"unexpected response shape: {exc}") from exc
    if not isinstance(content, str):
        raise GatewayProtocolError("response content is not a string")
    return content


def correct_remote(request: CorrectionRequest, config: EndpointConfig) -> CorrectionResponse:
    """One chat-completion call with retries on transient failures."""
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    body = _request_body(request)
    started = time.monotonic()
    last_exc: Exception | None = None
    timed_out = False
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.retry_backoff_s * 2 ** (attempt - 1))
        req = urllib.request.Request(config.endpoint_url, data=body, headers=headers)
        try:
            with urllib.request.urlopen(req, timeout=config.timeout_s) as resp:
                content = _extract_content(resp.read())
                latency = int((time.monotonic() - started) * 1000)
                return CorrectionResponse(
                    corrected_text=content,
                    latency_ms=latency,
                    raw_status={"http_status": resp.status, "attempts": attempt + 1},
                )
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise GatewayAuthError(f"endpoint rejected credential (HTTP {exc.code})") from exc
            if exc.code >= 500:
                last_exc = exc
                continue
            raise GatewayProtocolError(f"endpoint answered HTTP {exc.code}") from exc
        except urllib.error.URLError as exc:
            timed_out = isinstance(exc.reason, TimeoutError)
            last_exc = exc
            continue
        except TimeoutError as exc:
            timed_out = True
            last_exc = exc
            continue
    if timed_out:
        raise GatewayTimeoutError(
            f"no answer within {config.timeout_s}s after {config.max_retries + 1} attempts"
        ) from last_exc
    raise GatewayTransportError(
        f"transport failed after {config.max_retries + 1} attempts: {last_exc}"
    ) from last_exc


def _replace_pass(
    tokens: list[str],
    prepared,
    entries: list[str],
    common: CommonWordSet,
    d_max: int,
    max_span: int | None,
) -> list[str]:
    candidates = []
    for run_i, run in enumerate(remove_common(tokens, common)):
        for seg in enumerate_segments(run, max_span, run_i):
            best: list[tuple[int, str]] = []
            scan_best(seg.joined, prepared, entries, 1, best)
            if best and best[0][0] <= d_max:
                candidates.append((seg, best[0][0], best[0][1]))
    candidates.sort(key=lambda c: (-c[0].length, c[1], c[0].start_index, c[2]))
    claimed = [False] * len(tokens)
    planned: dict[int, tuple[int, str]] = {}
    for seg, _d, entry in candidates:
        span = range(seg.start_index, seg.start_index + seg.length)
        if any(claimed[i] for i in span):
            continue
        for i in span:
            claimed[i] = True
        planned[seg.start_index] = (seg.length, entry)
    out: list[str] = []
    i = 0
    while i < len(tokens):
        if i in planned:
            length, entry = planned[i]
            out.extend(entry.split(" "))
            i += length
        else:
            out.append(tokens[i])
            i += 1
    return out


def correct_mock(
    hypothesis: str,
    filtered_entries: list[str],
    common: CommonWordSet,
    d_max: int = DEFAULT_D_MAX,
    max_span: int | None = 3,
) -> CorrectionResponse:
    """Replace hypothesis segments with their nearest filtered entry.

    A segment is rewritten when its closest filtered entry lies within
    ``d_max``; longer spans are applied first, then lower distances, and
    replacements never overlap. Passes repeat until the text stops changing
    (first repeated state on a cycle), which makes the operation idempotent.
    With an empty filtered list this is the identity.
    """
    prepared = prepare_keys([e.replace(" ", "") for e in filtered_entries])
    tokens = sot.tokenize_with_markers(hypothesis)
    current = " ".join(tokens)
    if filtered_entries:
        seen = {current}
        for _ in range(_MAX_MOCK_ROUNDS):
            nxt_tokens = _replace_pass(
                current.split(" ") if current else [],
                prepared,
                filtered_entries,
                common,
                d_max,
                max_span,
            )
            nxt = " ".join(nxt_tokens)
            if nxt == current:
                break
            if nxt in seen:
                current = nxt
                break
            seen.add(nxt)
            current = nxt
    return CorrectionResponse(corrected_text=current, latency_ms=0, raw_status={"mode": "mock"})


T = TypeVar("T")
R = TypeVar("R")


def run_bounded(
    worker: Callable[[T], R],
    items: Iterable[tuple[str, T]],
    max_concurrency: int = 4,
) -> dict[str, R | Exception]:
    """Apply a worker over (id, item) pairs with bounded in-flight calls.

    Failures are captured per id instead of aborting the batch; callers
    decide whether a failed utterance degrades or stops the run. Results
    are keyed by id, so collection order never affects output.
    """
    results: dict[str, R | Exception] = {}
    items = list(items)
    if max_concurrency <= 1:
        for key, item in items:
            try:
                results[key] = worker(item)
            except Exception as exc:
                results[key] = exc
        return results
    with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
        futures = {key: pool.submit(worker, item) for key, item in items}
        for key, fut in futures.items():
            try:
                results[key] = fut.result()
            except Exception as exc:
                results[key] = exc
    return results
