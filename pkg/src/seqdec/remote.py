"""Remote scorer client and loopback server.

Wire protocol: newline-delimited JSON over a reliable byte stream.
Request:  {"id": uint, "context": str, "prefix": [token string, ...]}
Response: {"id": uint, "logprobs": {token string: float, ...}} covering
every extension token. Ids are echoed; the peer answers requests in
order. Rows are validated for vocabulary coverage and normalization
within 1e-6 (looser than the in-process 1e-9 to tolerate text
round-trip rounding).
"""

from __future__ import annotations

import json
import math
import socket
import socketserver
import threading
from typing import Sequence

from seqdec.core import ScorerTransportError, Vocabulary
from seqdec.scorers import Scorer


class RemoteScorer:
    """Client over a connected byte stream speaking the wire protocol."""

    def __init__(self, vocabulary: Vocabulary, host: str, port: int,
                 timeout: float = 10.0):
        self.vocabulary = vocabulary
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ScorerTransportError(f"connect to {host}:{port} failed: {exc}") from exc
        self._file = self._sock.makefile("rwb")
        self._next_id = 0
        self._lock = threading.Lock()

    def close(self) -> None:
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass

    def next_logprobs(self, context: str, prefix: Sequence[int]) -> dict[int, float]:
        vocab = self.vocabulary
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            request = {"id": req_id, "context": context,
                       "prefix": [vocab.tokens[i] for i in prefix]}
            try:
                self._file.write(json.dumps(request).encode("utf-8") + b"\n")
                self._file.flush()
                line = self._file.readline()
            except OSError as exc:
                raise ScorerTransportError(f"request failed: {exc}") from exc
        if not line:
            raise ScorerTransportError("peer closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerTransportError(f"malformed response: {exc}") from exc
        if response.get("id") != req_id:
            raise ScorerTransportError(
                f"response id {response.get('id')} does not match request {req_id}")
        logprobs = response.get("logprobs")
        if not isinstance(logprobs, dict):
            raise ScorerTransportError("response missing logprobs object")
        row = {}
        for tid in vocab.extension_ids:
            tok = vocab.tokens[tid]
            if tok not in logprobs:
                raise ScorerTransportError(f"response missing token {tok!r}")
            row[tid] = float(logprobs[tok])
        mass = sum(math.exp(lp) for lp in row.values() if lp != float("-inf"))
        if abs(mass - 1.0) > 1e-6:
            raise ScorerTransportError(f"response row sums to {mass}, not 1")
        return row


class _ScorerRequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        scorer: Scorer = self.server.scorer  # type: ignore[attr-defined]
        vocab = scorer.vocabulary
        str_to_id = {tok: i for i, tok in enumerate(vocab.tokens)}
        for line in self.rfile:
            if not line.strip():
                continue
            request = json.loads(line)
            prefix = tuple(str_to_id[t] for t in request["prefix"])
            row = scorer.next_logprobs(request.get("context", ""), prefix)
            response = {"id": request["id"],
                        "logprobs": {vocab.tokens[tid]: lp for tid, lp in row.items()}}
            self.wfile.write(json.dumps(response).encode("utf-8") + b"\n")
            self.wfile.flush()


class ScorerServer(socketserver.ThreadingTCPServer):
    """Loopback server exposing any in-process scorer over the protocol."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, scorer: Scorer, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _ScorerRequestHandler)
        self.scorer = scorer

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]

    def start(self) -> "ScorerServer":
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return self
