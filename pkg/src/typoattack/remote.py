"""Client side of the victim wire protocol (newline-delimited JSON, v1).

One connection carries one logical stream: requests go out one at a
time with strictly increasing ids, and every request is answered before
the next is sent. Three request shapes exist (handshake, predict,
grad_norms); see the dataclasses and validators below for the exact
payloads. The server's segmentation is authoritative: grad_norms
replies carry the server's tokens with a per-token whitespace-word
index, and both sides compute whitespace words identically, so the
attack can splice edits without sharing a tokenizer.

Failure scoping: a timeout or an invariant-violating reply poisons at
most the current example (the transport is reset and re-handshaken
behind the scenes); a closed stream or unparseable framing aborts the
run. Servers that advertise supports_gradients=false can only back the
random attack policy.
"""

from __future__ import annotations

import json
import math
import os
import select
import socket
import subprocess
from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    PayloadError,
    ProtocolError,
    RemoteVictimError,
    VictimQueryError,
)
from .victim import GradientReport, Prediction, SaliencyView, whitespace_spans

PROTOCOL_VERSION = 1


class TransportTimeout(RemoteVictimError):
    """No reply arrived in time; the connection must be reset."""


class TransportClosed(ProtocolError):
    """The peer closed the stream; nothing further can be trusted."""


class LineTransport(Protocol):
    """One UTF-8 JSON object per newline-terminated line, full duplex."""

    def send_line(self, line: bytes) -> None: ...

    def recv_line(self) -> bytes: ...

    def reset(self) -> None: ...

    def close(self) -> None: ...


@dataclass(frozen=True)
class VictimEndpoint:
    """Where a victim server lives and how patiently to talk to it."""

    kind: str  # "stdio-subprocess" | "tcp"
    argv: tuple[str, ...] | None = None
    host: str | None = None
    port: int | None = None
    timeout_ms: int = 10_000
    protocol_version: int = PROTOCOL_VERSION

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be positive, got {self.timeout_ms}")
        if self.protocol_version != PROTOCOL_VERSION:
            raise ValueError(
                f"client supports protocol {PROTOCOL_VERSION}, "
                f"endpoint asks for {self.protocol_version}"
            )
        if self.kind == "stdio-subprocess":
            if not self.argv:
                raise ValueError("stdio-subprocess endpoint needs argv")
        elif self.kind == "tcp":
            if not self.host or not self.port:
                raise ValueError("tcp endpoint needs host and port")
        else:
            raise ValueError(f"unknown endpoint kind {self.kind!r}")


class _LineBuffer:
    """Accumulates raw bytes and yields complete lines."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def pop_line(self) -> bytes | None:
        idx = self._buf.find(b"\n")
        if idx < 0:
            return None
        line = bytes(self._buf[:idx])
        del self._buf[: idx + 1]
        return line.rstrip(b"\r")

    def feed(self, chunk: bytes) -> None:
        self._buf.extend(chunk)


class SubprocessTransport:
    """Talks to a server spawned as a child process over its stdio."""

    def __init__(self, argv: Sequence[str], timeout_ms: int = 10_000) -> None:
        self.argv = tuple(argv)
        self.timeout_ms = timeout_ms
        self._buf = _LineBuffer()
        self._proc: subprocess.Popen | None = None
        self._spawn()

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise RemoteVictimError(f"cannot spawn {self.argv[0]!r}: {exc}") from exc

    def send_line(self, line: bytes) -> None:
        proc = self._proc
        if proc is None or proc.poll() is not None:
            raise TransportClosed("server process is not running")
        try:
            proc.stdin.write(line + b"\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportClosed(f"server closed stdin: {exc}") from exc

    def recv_line(self) -> bytes:
        proc = self._proc
        if proc is None:
            raise TransportClosed("server process is not running")
        fd = proc.stdout.fileno()
        deadline = self.timeout_ms / 1000.0
        while True:
            line = self._buf.pop_line()
            if line is not None:
                return line
            ready, _, _ = select.select([fd], [], [], deadline)
            if not ready:
                raise TransportTimeout(
                    f"no reply from {self.argv[0]!r} within {self.timeout_ms}ms"
                )
            chunk = os.read(fd, 65536)
            if not chunk:
                raise TransportClosed("server closed stdout")
            self._buf.feed(chunk)

    def reset(self) -> None:
        self.close()
        self._buf = _LineBuffer()
        self._spawn()

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


class TcpTransport:
    """Talks to a server listening on host:port."""

    def __init__(self, host: str, port: int, timeout_ms: int = 10_000) -> None:
        self.host = host
        self.port = port
        self.timeout_ms = timeout_ms
        self._buf = _LineBuffer()
        self._sock: socket.socket | None = None
        self._connect()

    def _connect(self) -> None:
        try:
            self._sock = socket.create_connection(
                (self.host, self.port), timeout=self.timeout_ms / 1000.0
            )
        except OSError as exc:
            raise RemoteVictimError(
                f"cannot connect to {self.host}:{self.port}: {exc}"
            ) from exc

    def send_line(self, line: bytes) -> None:
        if self._sock is None:
            raise TransportClosed("socket is not connected")
        try:
            self._sock.sendall(line + b"\n")
        except OSError as exc:
            raise TransportClosed(f"send failed: {exc}") from exc

    def recv_line(self) -> bytes:
        if self._sock is None:
            raise TransportClosed("socket is not connected")
        while True:
            line = self._buf.pop_line()
            if line is not None:
                return line
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise TransportTimeout(
                    f"no reply from {self.host}:{self.port} "
                    f"within {self.timeout_ms}ms"
                ) from None
            except OSError as exc:
                raise TransportClosed(f"recv failed: {exc}") from exc
            if not chunk:
                raise TransportClosed("server closed the connection")
            self._buf.feed(chunk)

    def reset(self) -> None:
        self.close()
        self._buf = _LineBuffer()
        self._connect()

    def close(self) -> None:
        sock, self._sock = self._sock, None
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass


class LoopbackTransport:
    """In-process scripted double: the handler sees each parsed request
    and returns a reply as a dict (serialized for it) or raw bytes (sent
    verbatim, for malformed-reply scripts), or None to stage a timeout."""

    def __init__(self, handler: Callable[[dict], dict | bytes | None]) -> None:
        self.handler = handler
        self.resets = 0
        self._pending: deque[bytes] = deque()

    def send_line(self, line: bytes) -> None:
        reply = self.handler(json.loads(line.decode("utf-8")))
        if reply is None:
            return
        if isinstance(reply, bytes):
            self._pending.append(reply)
        else:
            self._pending.append(json.dumps(reply).encode("utf-8"))

    def recv_line(self) -> bytes:
        if not self._pending:
            raise TransportTimeout("scripted: no reply staged")
        return self._pending.popleft()

    def reset(self) -> None:
        self.resets += 1
        self._pending.clear()

    def close(self) -> None:
        self._pending.clear()


@dataclass(frozen=True)
class Capabilities:
    version: int
    num_classes: int
    tokenizer_id: str
    supports_gradients: bool


def _decode_reply(raw: bytes) -> dict:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ProtocolError(f"reply is not UTF-8 at byte offset {exc.start}") from exc
    except json.JSONDecodeError as exc:
        raise ProtocolError(
            f"malformed JSON reply at byte offset {exc.pos}: {exc.msg}"
        ) from exc
    if not isinstance(obj, dict):
        raise ProtocolError(f"reply is not a JSON object: {raw[:80]!r}")
    return obj


def _finite_floats(values, what: str) -> list[float]:
    if not isinstance(values, list) or not values:
        raise PayloadError(f"{what} is not a non-empty array")
    out = []
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise PayloadError(f"{what} contains a non-finite entry: {v!r}")
        out.append(float(v))
    return out


class RemoteVictim:
    """Drop-in victim backed by a wire-protocol server.

    Exposes the same predict / grad_norms / saliency_view surface as the
    built-in model, so the attack engine cannot tell them apart.
    """

    def __init__(self, transport: LineTransport) -> None:
        self.transport = transport
        self.capabilities: Capabilities | None = None
        self._next_id = 1
        self._dirty = False

    @classmethod
    def connect(cls, endpoint: VictimEndpoint) -> "RemoteVictim":
        """Open the endpoint's transport and handshake immediately, so
        unreachable or incompatible servers fail before any attack."""
        if endpoint.kind == "stdio-subprocess":
            transport = SubprocessTransport(endpoint.argv, endpoint.timeout_ms)
        else:
            transport = TcpTransport(endpoint.host, endpoint.port, endpoint.timeout_ms)
        victim = cls(transport)
        victim.handshake()
        return victim

    # -- plumbing ---------------------------------------------------------

    def _request(self, payload: dict) -> dict:
        if self._dirty:
            # previous exchange timed out; the stream may hold a stale
            # reply, so start a fresh connection and handshake again
            self.transport.reset()
            self._dirty = False
            self.capabilities = None
            self._handshake_exchange()
        rid = self._next_id
        self._next_id += 1
        line = json.dumps({"id": rid, **payload}, ensure_ascii=False).encode("utf-8")
        self.transport.send_line(line)
        try:
            reply = _decode_reply(self.transport.recv_line())
        except TransportTimeout as exc:
            self._dirty = True
            raise VictimQueryError(str(exc)) from exc
        if reply.get("id") != rid:
            raise ProtocolError(f"reply id {reply.get('id')!r} != request id {rid}")
        return reply

    def _handshake_exchange(self) -> Capabilities:
        reply = self._request({"op": "handshake"})
        if not reply.get("ok"):
            raise RemoteVictimError(
                f"handshake refused: {reply.get('error', 'no reason given')}"
            )
        version = reply.get("version")
        if version != PROTOCOL_VERSION:
            raise ProtocolError(
                f"server speaks protocol {version!r}, "
                f"client supports {PROTOCOL_VERSION}"
            )
        num_classes = reply.get("num_classes")
        tokenizer_id = reply.get("tokenizer_id")
        supports = reply.get("supports_gradients")
        if not isinstance(num_classes, int) or num_classes < 2:
            raise PayloadError(f"bad num_classes {num_classes!r}")
        if not isinstance(tokenizer_id, str) or not tokenizer_id:
            raise PayloadError(f"bad tokenizer_id {tokenizer_id!r}")
        if not isinstance(supports, bool):
            raise PayloadError(f"bad supports_gradients {supports!r}")
        self.capabilities = Capabilities(version, num_classes, tokenizer_id, supports)
        return self.capabilities

    def handshake(self) -> Capabilities:
        if self.capabilities is None:
            self._handshake_exchange()
        return self.capabilities

    def _ready(self) -> Capabilities:
        return self.handshake()

    # -- victim surface ----------------------------------------------------

    @property
    def num_classes(self) -> int:
        return self._ready().num_classes

    @property
    def supports_gradients(self) -> bool:
        return self._ready().supports_gradients

    def predict(self, text: str) -> Prediction:
        caps = self._ready()
        reply = self._request({"op": "predict", "text": text})
        if not reply.get("ok"):
            raise VictimQueryError(
                f"predict failed: {reply.get('error', 'no reason given')}"
            )
        probs = _finite_floats(reply.get("probs"), "probs")
        if len(probs) != caps.num_classes:
            raise PayloadError(
                f"probs has {len(probs)} entries, server declared "
                f"{caps.num_classes} classes"
            )
        if abs(sum(probs) - 1.0) > 1e-3:
            raise PayloadError(f"probs sum to {sum(probs):.6f}, not 1")
        label = reply.get("label")
        if not isinstance(label, int) or not 0 <= label < caps.num_classes:
            raise PayloadError(f"bad label {label!r}")
        return Prediction(label, np.array(probs))

    def _grad_reply(self, text: str, gold: int) -> dict:
        caps = self._ready()
        if not caps.supports_gradients:
            raise RemoteVictimError(
                "server does not expose gradients; only the random attack "
                "policy can run against it"
            )
        if not 0 <= gold < caps.num_classes:
            raise ValueError(f"gold label {gold} out of range [0, {caps.num_classes})")
        reply = self._request({"op": "grad_norms", "text": text, "gold": gold})
        if not reply.get("ok"):
            raise VictimQueryError(
                f"grad_norms failed: {reply.get('error', 'no reason given')}"
            )
        tokens = reply.get("tokens")
        if not isinstance(tokens, list) or not all(
            isinstance(t, str) for t in tokens
        ):
            raise PayloadError("tokens is not an array of strings")
        norms = _finite_floats(reply.get("norms"), "norms")
        word_index = reply.get("word_index")
        if not isinstance(word_index, list) or not all(
            isinstance(w, int) for w in word_index
        ):
            raise PayloadError("word_index is not an array of integers")
        if not len(tokens) == len(norms) == len(word_index):
            raise PayloadError(
                f"length mismatch: {len(tokens)} tokens, {len(norms)} norms, "
                f"{len(word_index)} word indices"
            )
        loss = reply.get("loss")
        if not isinstance(loss, (int, float)) or isinstance(loss, bool) \
                or not math.isfinite(loss):
            raise PayloadError(f"bad loss {loss!r}")
        return {"tokens": tokens, "norms": norms,
                "word_index": word_index, "loss": float(loss)}

    def grad_norms(self, text: str, gold: int) -> GradientReport:
        reply = self._grad_reply(text, gold)
        return GradientReport(np.array(reply["norms"]), reply["loss"])

    def saliency_view(self, text: str, gold: int) -> SaliencyView:
        reply = self._grad_reply(text, gold)
        words = whitespace_spans(text)
        component_word: list[int] = []
        norms: list[float] = []
        # servers flag special tokens (sequence delimiters) with -1:
        # reported, but never attackable, so they stay out of the view
        for wi, norm in zip(reply["word_index"], reply["norms"]):
            if wi == -1:
                continue
            if not 0 <= wi < len(words):
                raise PayloadError(
                    f"word_index {wi} outside the {len(words)} whitespace "
                    f"words of the submitted text"
                )
            component_word.append(wi)
            norms.append(norm)
        return SaliencyView(
            words, tuple(component_word), np.array(norms), reply["loss"]
        )

    def close(self) -> None:
        self.transport.close()
