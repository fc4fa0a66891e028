"""Client for translator/tagger models served over the line-delimited JSON protocol.

One request per line: ``{"id": n, "op": "translate"|"tag", "src": ..., "tgt": ...,
"tokens": [...]}``; one response per request: ``{"id": n, "tokens": [...]}``,
``{"id": n, "tags": [...]}``, or ``{"id": n, "error": "..."}``. Transports:
a child process speaking the protocol on stdin/stdout, or HTTP POST with one
record per body line. Responses are matched by id, and contract violations
(batch length, tag length, boundary-symbol counts, BIO validity) raise
instead of corrupting the pipeline silently.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
import urllib.error
import urllib.request
from typing import Sequence

from ..corpus_io import spans_from_tags, InvalidBio
from ..labeled_seq import BoundarySymbolTable, symbol_counts
from .base import (
    BackendContractViolation,
    BackendTimeout,
    BackendUnavailable,
    ProtocolError,
    TokenBatch,
)

DEFAULT_TIMEOUT = 120.0  # seconds per batch


class StdioTransport:
    """Keeps one child process alive and exchanges newline-delimited records."""

    def __init__(self, command: Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        self.command = list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()

    def _ensure_started(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
            )
        except OSError as e:
            raise BackendUnavailable(f"cannot start backend {self.command}: {e}") from e
        self._lines = queue.Queue()
        threading.Thread(
            target=self._pump, args=(self._proc, self._lines), daemon=True
        ).start()

    @staticmethod
    def _pump(proc: subprocess.Popen, lines: "queue.Queue[str | None]"):
        for line in proc.stdout:
            lines.put(line)
        lines.put(None)

    def roundtrip(self, request_lines: list[str]) -> list[str]:
        self._ensure_started()
        try:
            self._proc.stdin.write("".join(line + "\n" for line in request_lines))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise BackendUnavailable(f"backend process died: {e}") from e
        out: list[str] = []
        while len(out) < len(request_lines):
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                raise BackendTimeout(
                    f"backend timed out after {self.timeout}s"
                ) from None
            if line is None:
                raise BackendUnavailable("backend closed its output stream")
            if line.strip():
                out.append(line)
        return out

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)


class HttpTransport:
    """POSTs a batch of records as the request body, one per line."""

    def __init__(self, url: str, timeout: float = DEFAULT_TIMEOUT):
        self.url = url
        self.timeout = timeout

    def roundtrip(self, request_lines: list[str]) -> list[str]:
        body = "".join(line + "\n" for line in request_lines).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/x-ndjson"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                text = resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError) as e:
            reason = getattr(e, "reason", e)
            if isinstance(reason, TimeoutError) or isinstance(e, TimeoutError):
                raise BackendTimeout(
                    f"backend at {self.url} timed out after {self.timeout}s"
                ) from e
            raise BackendUnavailable(f"cannot reach backend at {self.url}: {e}") from e
        return [line for line in text.split("\n") if line.strip()]

    def close(self):
        pass


class ExternalBackend:
    """Translator and tagger facade over a wire-protocol transport.

    Batches are single-flight: calls are serialized with a lock, so one
    handle may be shared across pipeline workers.
    """

    def __init__(self, transport, table: BoundarySymbolTable = BoundarySymbolTable()):
        self.transport = transport
        self.table = table
        self._lock = threading.Lock()
        self._next_id = 0

    @classmethod
    def spawn(cls, command: Sequence[str], timeout: float = DEFAULT_TIMEOUT) -> "ExternalBackend":
        return cls(StdioTransport(command, timeout))

    @classmethod
    def connect(cls, url: str, timeout: float = DEFAULT_TIMEOUT) -> "ExternalBackend":
        return cls(HttpTransport(url, timeout))

    def close(self):
        self.transport.close()

    # -- protocol ------------------------------------------------------------

    def _submit(self, records: list[dict]) -> dict[int, dict]:
        lines = [json.dumps(r, ensure_ascii=False) for r in records]
        raw = self.transport.roundtrip(lines)
        if len(raw) != len(records):
            raise ProtocolError(f"sent {len(records)} records, got {len(raw)} responses")
        by_id: dict[int, dict] = {}
        for line in raw:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ProtocolError(f"unparseable response line {line!r}") from e
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), int):
                raise ProtocolError(f"response without integer id: {line!r}")
            if obj["id"] in by_id:
                raise ProtocolError(f"duplicate response id {obj['id']}")
            by_id[obj["id"]] = obj
        for r in records:
            if r["id"] not in by_id:
                raise ProtocolError(f"no response for request id {r['id']}")
            if "error" in by_id[r["id"]]:
                raise ProtocolError(
                    f"backend error for id {r['id']}: {by_id[r['id']]['error']}"
                )
        return by_id

    def translate(self, batch: TokenBatch, src_lang: str, tgt_lang: str) -> list[list[str]]:
        with self._lock:
            records = []
            for tokens in batch:
                records.append(
                    {
                        "id": self._next_id,
                        "op": "translate",
                        "src": src_lang,
                        "tgt": tgt_lang,
                        "tokens": list(tokens),
                    }
                )
                self._next_id += 1
            responses = self._submit(records)
        out = []
        for req, tokens in zip(records, batch):
            resp = responses[req["id"]]
            got = resp.get("tokens")
            if not isinstance(got, list) or not all(isinstance(t, str) for t in got):
                raise ProtocolError(f"translate response without tokens: {resp}")
            if symbol_counts(got, self.table) != symbol_counts(tokens, self.table):
                raise BackendContractViolation(
                    f"boundary symbols not conserved: {list(tokens)} -> {got}"
                )
            out.append(got)
        return out

    def tag(self, batch: TokenBatch) -> list[list[str]]:
        with self._lock:
            records = []
            for tokens in batch:
                records.append({"id": self._next_id, "op": "tag", "tokens": list(tokens)})
                self._next_id += 1
            responses = self._submit(records)
        out = []
        for req, tokens in zip(records, batch):
            resp = responses[req["id"]]
            got = resp.get("tags")
            if not isinstance(got, list) or not all(isinstance(t, str) for t in got):
                raise ProtocolError(f"tag response without tags: {resp}")
            if len(got) != len(tokens):
                raise BackendContractViolation(
                    f"{len(got)} tags for {len(tokens)} tokens"
                )
            try:
                spans_from_tags(got)
            except InvalidBio as e:
                raise BackendContractViolation(f"invalid BIO-2 from backend: {e}") from e
            out.append(got)
        return out
