"""Newline-delimited JSON protocol loop (wire protocol v1).

One request object per line, one reply line per request, ids echoed
back. Payload floats are rounded to 8 significant digits so identical
checkpoints produce byte-identical transcripts. A model that failed to
load still answers: every handshake is refused with the load error.
"""

from __future__ import annotations

import json
import socketserver
import sys
import threading
from dataclasses import dataclass
from typing import BinaryIO

from .model import ServedModel

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class LoadFailure:
    """Stands in for the model when loading failed at startup."""

    reason: str


def _round8(value: float) -> float:
    return float(f"{value:.8g}")


def handle_request(
    served: ServedModel | LoadFailure, req: dict, lock: threading.Lock
) -> dict:
    rid = req.get("id")
    if not isinstance(rid, int) or isinstance(rid, bool):
        return {"id": -1, "ok": False, "error": "request id must be an integer"}
    op = req.get("op")
    if isinstance(served, LoadFailure):
        return {"id": rid, "ok": False,
                "error": f"model unavailable: {served.reason}"}
    if op == "handshake":
        return {
            "id": rid,
            "ok": True,
            "version": PROTOCOL_VERSION,
            "num_classes": served.num_classes,
            "tokenizer_id": served.tokenizer.tokenizer_id,
            "supports_gradients": True,
        }
    if op == "predict":
        text = req.get("text")
        if not isinstance(text, str):
            return {"id": rid, "ok": False, "error": "predict needs a string text"}
        with lock:
            probs, label = served.predict(text)
        return {
            "id": rid,
            "ok": True,
            "probs": [_round8(p) for p in probs],
            "label": label,
        }
    if op == "grad_norms":
        text = req.get("text")
        gold = req.get("gold")
        if not isinstance(text, str):
            return {"id": rid, "ok": False, "error": "grad_norms needs a string text"}
        if not isinstance(gold, int) or isinstance(gold, bool) \
                or not 0 <= gold < served.num_classes:
            return {
                "id": rid, "ok": False,
                "error": f"gold must be an integer in [0, {served.num_classes})",
            }
        with lock:
            tokens, word_index, norms, loss = served.grad_norms(text, gold)
        return {
            "id": rid,
            "ok": True,
            "tokens": tokens,
            "word_index": word_index,
            "norms": [_round8(n) for n in norms],
            "loss": _round8(loss),
        }
    return {"id": rid, "ok": False, "error": f"unknown op {op!r}"}


def serve_stream(
    served: ServedModel | LoadFailure,
    rfile: BinaryIO,
    wfile: BinaryIO,
    lock: threading.Lock | None = None,
) -> None:
    """Answers requests line by line until the input stream closes."""
    lock = lock or threading.Lock()
    for line in rfile:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("request is not an object")
        except (ValueError, UnicodeDecodeError) as exc:
            reply = {"id": -1, "ok": False, "error": f"unreadable request: {exc}"}
        else:
            reply = handle_request(served, req, lock)
        wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
        wfile.flush()


def serve_stdio(served: ServedModel | LoadFailure) -> None:
    serve_stream(served, sys.stdin.buffer, sys.stdout.buffer)


def serve_tcp(
    served: ServedModel | LoadFailure, host: str, port: int
) -> socketserver.ThreadingTCPServer:
    """Starts a threaded TCP server; connections share one inference lock."""
    lock = threading.Lock()

    class Handler(socketserver.StreamRequestHandler):
        def handle(self) -> None:
            serve_stream(served, self.rfile, self.wfile, lock)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)
