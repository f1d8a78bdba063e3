"""Shared fixtures: deterministic synthetic corpora.

Common and rare vocabularies draw from disjoint letter ranges so that a
rare word never collides with a common one; corrupted forms are checked
against the actual common set wherever a test's condition depends on it.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from biasforge import sot
from biasforge.corpus_io import UtteranceRecord, WordList
from biasforge.rng import Rng
from biasforge.text_norm import CommonWordSet, build_common_set

COMMON_LETTERS = "ABCDEFGHIJKLM"
RARE_LETTERS = "NOPQRSTUVWXYZ"


def make_vocab(rng: Rng, size: int, letters: str, lo: int = 4, hi: int = 12) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        length = lo + rng.randbelow(hi - lo + 1)
        word = "".join(rng.choice(letters) for _ in range(length))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def build_synthetic_corpus(
    n_utts: int,
    seed: int,
    common_vocab: list[str],
    rare_vocab: list[str],
    p_rare: float = 0.4,
    n_speakers: int = 2,
) -> list[UtteranceRecord]:
    rng = Rng(seed)
    records = []
    for i in range(n_utts):
        segments = []
        for s in range(n_speakers):
            length = 4 + rng.randbelow(5)
            tokens = [
                rng.choice(rare_vocab) if rng.random() < p_rare else rng.choice(common_vocab)
                for _ in range(length)
            ]
            segments.append(
                sot.SpeakerSegment(speaker_id=f"spk{s}", tokens=tokens, start_time=float(s))
            )
        records.append(
            UtteranceRecord(id=f"u{i:04d}", reference=sot.serialize_sot(segments))
        )
    return records


@pytest.fixture(scope="session")
def common_vocab() -> list[str]:
    return make_vocab(Rng(101), 300, COMMON_LETTERS)


@pytest.fixture(scope="session")
def rare_vocab() -> list[str]:
    return make_vocab(Rng(202), 9000, RARE_LETTERS)


@pytest.fixture(scope="session")
def common_set(common_vocab) -> CommonWordSet:
    return build_common_set(common_vocab, k=len(common_vocab))


@pytest.fixture(scope="session")
def full_list(rare_vocab) -> WordList:
    return WordList(entries=list(rare_vocab), source="full_rare")


@pytest.fixture(scope="session")
def corpus(common_vocab, rare_vocab) -> list[UtteranceRecord]:
    return build_synthetic_corpus(60, seed=7, common_vocab=common_vocab, rare_vocab=rare_vocab)


@pytest.fixture(scope="session")
def big_entries() -> list[str]:
    """A full-scale word list: 209,200 unique entries."""
    rng = Rng(42)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    seen: set[str] = set()
    entries: list[str] = []
    while len(entries) < 209_200:
        w = "".join(rng.choice(alphabet) for _ in range(4 + rng.randbelow(13)))
        if w not in seen:
            seen.add(w)
            entries.append(w)
    return entries


class StubChatHandler(BaseHTTPRequestHandler):
    """Scripted chat-completions endpoint.

    Each request consumes one script action: "ok" echoes the final paragraph
    of the user message, "500"/"401" answer those statuses, "sleep" stalls
    past any sane client timeout, "badjson" returns garbage.
    """

    script: list
    calls: list

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).calls.append(body)
        action = self.script.pop(0) if self.script else "ok"
        if action == "sleep":
            time.sleep(2.0)
            action = "ok"
        if action == "500":
            self.send_error(500, "boom")
            return
        if action == "401":
            self.send_error(401, "who are you")
            return
        if action == "badjson":
            payload = b"not json"
        else:
            user = body["messages"][1]["content"]
            echoed = user.split("\n\n", 1)[1] if "\n\n" in user else user
            payload = json.dumps({"choices": [{"message": {"content": echoed}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    """Start scripted endpoints; yields a factory returning (url, handler)."""
    servers = []

    def start(script):
        handler = type("Handler", (StubChatHandler,), {"script": list(script), "calls": []})
        server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions", handler

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
