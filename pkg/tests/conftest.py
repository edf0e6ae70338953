"""Shared fixtures: tiny handcrafted test sets and a stub embedding server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest

from rankfair.providers import write_embedding_store
from rankfair.testset import CorpusItem, QueryPair, TestSet

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def mini_test_set() -> TestSet:
    """3 queries (2 paired + 1 neutral), 5 corpus items, judged."""
    return TestSet(
        language="es",
        queries=(
            QueryPair(id="q1", feminine="abogada", masculine="abogado", neutral=False),
            QueryPair(id="q2", feminine="peluquera", masculine="peluquero", neutral=False),
            QueryPair(
                id="q3", feminine="analista de datos", masculine="analista de datos", neutral=True
            ),
        ),
        corpus=(
            CorpusItem(id="c1", feminine="abogada adjunta", masculine="abogado adjunto", neutral=False),
            CorpusItem(id="c2", feminine="abogada", masculine="abogado", neutral=False),
            CorpusItem(id="c3", feminine="analista de datos", masculine="analista de datos", neutral=True),
            CorpusItem(id="c4", feminine="peluquera", masculine="peluquero", neutral=False),
            CorpusItem(id="c5", feminine="urbanista", masculine="urbanista", neutral=True),
        ),
        judgments={
            "q1": frozenset({"c1", "c2"}),
            "q2": frozenset({"c4"}),
            "q3": frozenset({"c3"}),
        },
    )


# ---------------------------------------------------------------------------
# Hand-built 4-query store: rankings and their mean RBO are known by hand.
# ---------------------------------------------------------------------------

HAND_STORE = {
    # corpus (neutral items, one surface form each)
    "title one": [1.0, 0.0],
    "title two": [0.0, 1.0],
    # q1: both genders find c1 first -> RBO 1
    "aligned f": [1.0, 0.0],
    "aligned m": [1.0, 0.0],
    # q2: genders rank the 2-item corpus oppositely -> RBO 0.5
    "opposed f": [1.0, 0.0],
    "opposed m": [0.0, 1.0],
    # q3: opposite again, with non-axis vectors -> RBO 0.5
    "tilted f": [0.9, 0.1],
    "tilted m": [0.1, 0.9],
    # q4: both genders find c2 first -> RBO 1
    "same f": [0.0, 1.0],
    "same m": [0.0, 1.0],
}

HAND_MEAN_RBO = (1.0 + 0.5 + 0.5 + 1.0) / 4


@pytest.fixture
def hand_test_set() -> TestSet:
    return TestSet(
        language="es",
        queries=(
            QueryPair(id="q1", feminine="aligned f", masculine="aligned m", neutral=False),
            QueryPair(id="q2", feminine="opposed f", masculine="opposed m", neutral=False),
            QueryPair(id="q3", feminine="tilted f", masculine="tilted m", neutral=False),
            QueryPair(id="q4", feminine="same f", masculine="same m", neutral=False),
        ),
        corpus=(
            CorpusItem(id="c1", feminine="title one", masculine="title one", neutral=True),
            CorpusItem(id="c2", feminine="title two", masculine="title two", neutral=True),
        ),
        judgments={
            "q1": frozenset({"c1"}),
            "q2": frozenset({"c1"}),
            "q3": frozenset({"c2"}),
            "q4": frozenset({"c2"}),
        },
    )


@pytest.fixture
def hand_store_path(tmp_path) -> Path:
    path = tmp_path / "hand_store.jsonl"
    write_embedding_store(path, {text: np.array(vec) for text, vec in HAND_STORE.items()})
    return path


# ---------------------------------------------------------------------------
# Stub embedding server (the sidecar wire protocol, canned)
# ---------------------------------------------------------------------------


class StubEmbedServer:
    """Tiny in-process server speaking the sidecar protocol.

    Vectors come from a fixed table when given, otherwise from a stable
    per-text hash, so repeated requests are identical.  Behaviour switches
    (fail_next, bad_count) let tests drive the client's error paths.
    """

    def __init__(self, dim: int = 4, table: dict[str, list[float]] | None = None):
        self.dim = dim
        self.table = table or {}
        self.fail_next: int | None = None  # HTTP status to return once
        self.bad_count = False  # drop one vector from the next response
        self.requests: list[dict] = []

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def _send(self, status: int, payload: dict):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/v1/info":
                    self._send(200, {"model": "stub-model", "dim": stub.dim})
                elif self.path == "/v1/health":
                    self._send(200, {"status": "ok"})
                else:
                    self._send(404, {"error": "not found"})

            def do_POST(self):
                if self.path != "/v1/embed":
                    self._send(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                request = json.loads(self.rfile.read(length))
                stub.requests.append(request)
                if stub.fail_next is not None:
                    status = stub.fail_next
                    stub.fail_next = None
                    self._send(status, {"error": "injected failure"})
                    return
                vectors = [stub.vector_for(text) for text in request["texts"]]
                if stub.bad_count:
                    stub.bad_count = False
                    vectors = vectors[:-1]
                self._send(200, {"model": "stub-model", "dim": stub.dim, "vectors": vectors})

        self._server = HTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def vector_for(self, text: str) -> list[float]:
        if text in self.table:
            return list(self.table[text])
        rng = np.random.default_rng(abs(hash(text)) % (2**32))
        return rng.normal(size=self.dim).tolist()

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self) -> "StubEmbedServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    with StubEmbedServer() as server:
        yield server
