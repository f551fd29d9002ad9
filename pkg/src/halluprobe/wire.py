"""Newline-delimited JSON protocol over child-process pipes or TCP.

One message per line. The server speaks first with a handshake object
``{"hello": <service>, "version": 1}``; after that every request carries an
integer id and receives exactly one response with the same id. Responses may
arrive out of order and are matched by id. Shared by the ASR backend client,
the perplexity provider client, and the self-hosting simulator server.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import time
from typing import Callable

from .errors import BackendUnreachableError, ProtocolViolationError

PROTOCOL_VERSION = 1
HELLO_ASR = "asr-backend"
HELLO_LM = "lm-provider"


class _LineReader:
    """Incremental line assembly over a raw file descriptor with timeouts."""

    def __init__(self, fd: int) -> None:
        self._fd = fd
        self._buf = b""
        self._eof = False

    def readline(self, timeout: float) -> str | None:
        """Next line without trailing newline, or None on EOF."""
        deadline = time.monotonic() + timeout
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line, self._buf = self._buf[:nl], self._buf[nl + 1 :]
                return line.decode("utf-8", errors="replace")
            if self._eof:
                if self._buf:
                    line, self._buf = self._buf, b""
                    return line.decode("utf-8", errors="replace")
                return None
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendUnreachableError("timed out waiting for a protocol line")
            ready, _, _ = select.select([self._fd], [], [], remaining)
            if not ready:
                raise BackendUnreachableError("timed out waiting for a protocol line")
            chunk = os.read(self._fd, 65536)
            if not chunk:
                self._eof = True
            else:
                self._buf += chunk


class Transport:
    def readline(self, timeout: float) -> str | None:
        raise NotImplementedError

    def write_line(self, line: str) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class ProcessTransport(Transport):
    """Child process with the protocol on its standard streams; stderr passes through."""

    def __init__(self, command: str) -> None:
        self.command = command
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                bufsize=0,
            )
        except OSError as exc:
            raise BackendUnreachableError(f"cannot spawn backend process {command!r}: {exc}") from exc
        assert self._proc.stdout is not None and self._proc.stdin is not None
        self._reader = _LineReader(self._proc.stdout.fileno())

    def readline(self, timeout: float) -> str | None:
        return self._reader.readline(timeout)

    def write_line(self, line: str) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(line.encode("utf-8") + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendUnreachableError(f"backend process pipe closed: {exc}") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class TcpTransport(Transport):
    def __init__(self, address: str) -> None:
        self.address = address
        host, _, port = address.rpartition(":")
        try:
            self._sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=10.0)
        except (OSError, ValueError) as exc:
            raise BackendUnreachableError(f"cannot connect to backend at {address!r}: {exc}") from exc
        self._sock.setblocking(False)
        self._reader = _LineReader(self._sock.fileno())

    def readline(self, timeout: float) -> str | None:
        return self._reader.readline(timeout)

    def write_line(self, line: str) -> None:
        try:
            self._sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise BackendUnreachableError(f"backend socket closed: {exc}") from exc

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class JsonLinesClient:
    """Request/response client with id matching and out-of-order buffering."""

    def __init__(
        self,
        transport: Transport,
        timeout: float = 30.0,
        expect_hello: str | None = None,
    ) -> None:
        self._transport = transport
        self.timeout = timeout
        self._next_id = 1
        self._issued: set[int] = set()
        self._arrived: dict[int, dict] = {}
        self.hello = self._read_handshake(expect_hello)

    def _read_handshake(self, expect_hello: str | None) -> dict:
        line = self._transport.readline(self.timeout)
        if line is None:
            raise BackendUnreachableError("connection closed before handshake")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolViolationError(f"handshake is not valid JSON: {line!r}") from exc
        if not isinstance(msg, dict) or not isinstance(msg.get("hello"), str):
            raise ProtocolViolationError(f"handshake missing 'hello': {line!r}")
        if msg.get("version") != PROTOCOL_VERSION:
            raise ProtocolViolationError(f"unsupported protocol version: {msg.get('version')!r}")
        if expect_hello is not None and msg["hello"] != expect_hello:
            raise ProtocolViolationError(f"expected hello {expect_hello!r}, got {msg['hello']!r}")
        return msg

    def request(self, payload: dict) -> int:
        """Send one request, return its id (for pipelined collection)."""
        rid = self._next_id
        self._next_id += 1
        self._issued.add(rid)
        self._transport.write_line(json.dumps({"id": rid, **payload}))
        return rid

    def collect(self, rid: int) -> dict:
        """Block until the response with this id arrives."""
        if rid not in self._issued:
            raise ProtocolViolationError(f"response id {rid} was never requested")
        while rid not in self._arrived:
            line = self._transport.readline(self.timeout)
            if line is None:
                raise BackendUnreachableError("connection closed while awaiting a response")
            if not line.strip():
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolViolationError(f"response is not valid JSON: {line!r}") from exc
            if not isinstance(msg, dict) or not isinstance(msg.get("id"), int):
                raise ProtocolViolationError(f"response missing integer id: {line!r}")
            msg_id = msg["id"]
            if msg_id not in self._issued:
                raise ProtocolViolationError(f"response id {msg_id} does not match any pending request")
            if msg_id in self._arrived:
                raise ProtocolViolationError(f"duplicate response for id {msg_id}")
            self._arrived[msg_id] = msg
        self._issued.discard(rid)
        return self._arrived.pop(rid)

    def call(self, payload: dict) -> dict:
        return self.collect(self.request(payload))

    def close(self) -> None:
        self._transport.close()


Handler = Callable[[dict], dict]


def serve_stream(handler: Handler, hello: str, rfile, wfile) -> None:
    """Blocking serve loop over byte streams (used for stdio and TCP serving).

    The handler receives the parsed request and returns the response fields
    (everything except the echoed id). Handler exceptions become error
    responses; the connection stays alive. Requests that cannot be parsed or
    carry no integer id are answered with id -1.
    """
    wfile.write(json.dumps({"hello": hello, "version": PROTOCOL_VERSION}).encode("utf-8") + b"\n")
    wfile.flush()
    for raw in rfile:
        line = raw.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            msg = None
        if not isinstance(msg, dict) or not isinstance(msg.get("id"), int):
            response = {"id": -1, "error": "malformed request: expected a JSON object with an integer id"}
        else:
            rid = msg["id"]
            try:
                response = {"id": rid, **handler(msg)}
            except Exception as exc:  # noqa: BLE001 - protocol servers must not die on bad input
                response = {"id": rid, "error": str(exc)}
        wfile.write(json.dumps(response).encode("utf-8") + b"\n")
        wfile.flush()


def open_transport(spec: str) -> Transport:
    """Build a transport from ``exec:<command>`` or ``tcp:<host:port>``."""
    if spec.startswith("exec:"):
        return ProcessTransport(spec[len("exec:") :])
    if spec.startswith("tcp:"):
        return TcpTransport(spec[len("tcp:") :])
    raise ValueError(f"unknown transport spec {spec!r} (expected exec:<cmd> or tcp:<addr>)")
