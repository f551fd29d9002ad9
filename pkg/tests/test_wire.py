import io
import sys
from pathlib import Path

import pytest

from halluprobe.errors import BackendUnreachableError, ProtocolViolationError
from halluprobe.wire import (
    HELLO_ASR,
    JsonLinesClient,
    ProcessTransport,
    open_transport,
    serve_stream,
)

SERVERS = Path(__file__).parent / "wire_servers.py"


def spawn(mode: str) -> ProcessTransport:
    return ProcessTransport(f"{sys.executable} {SERVERS} {mode}")


class TestHandshake:
    def test_missing_handshake(self):
        transport = spawn("no-handshake")
        # server echoes a response without ever saying hello; first line fails validation
        transport.write_line("{}")
        with pytest.raises(ProtocolViolationError):
            JsonLinesClient(transport, timeout=10)
        transport.close()

    def test_wrong_version(self):
        transport = spawn("bad-version")
        with pytest.raises(ProtocolViolationError):
            JsonLinesClient(transport, timeout=10)
        transport.close()

    def test_expected_hello_enforced(self):
        transport = spawn("echo")
        with pytest.raises(ProtocolViolationError):
            JsonLinesClient(transport, timeout=10, expect_hello="lm-provider")
        transport.close()

    def test_dead_before_handshake(self):
        transport = ProcessTransport(f"{sys.executable} -c 'pass'")
        with pytest.raises(BackendUnreachableError):
            JsonLinesClient(transport, timeout=10)
        transport.close()


class TestIdMatching:
    def test_out_of_order_responses_are_buffered(self):
        client = JsonLinesClient(spawn("out-of-order"), timeout=10)
        first = client.request({"op": "ppl", "text": "a"})
        second = client.request({"op": "ppl", "text": "b"})
        assert client.collect(first)["ppl"] == 11.0
        assert client.collect(second)["ppl"] == 22.0
        client.close()

    def test_unrequested_id_is_violation(self):
        client = JsonLinesClient(spawn("wrong-id"), timeout=10)
        with pytest.raises(ProtocolViolationError):
            client.call({"op": "transcribe"})
        client.close()

    def test_collect_unknown_id_rejected(self):
        client = JsonLinesClient(spawn("echo"), timeout=10)
        with pytest.raises(ProtocolViolationError):
            client.collect(999)
        client.close()

    def test_eof_mid_request(self):
        client = JsonLinesClient(spawn("die-mid-stream"), timeout=10)
        with pytest.raises(BackendUnreachableError):
            client.call({"op": "transcribe"})
        client.close()


class TestServeStream:
    def run_server(self, lines: list[str]):
        rfile = io.BytesIO("".join(line + "\n" for line in lines).encode("utf-8"))
        wfile = io.BytesIO()

        def handler(msg: dict) -> dict:
            if msg.get("op") == "boom":
                raise ValueError("handler exploded")
            return {"echo": msg.get("op")}

        serve_stream(handler, HELLO_ASR, rfile, wfile)
        out = [l for l in wfile.getvalue().decode("utf-8").split("\n") if l]
        import json

        return [json.loads(l) for l in out]

    def test_handshake_first(self):
        out = self.run_server([])
        assert out[0] == {"hello": "asr-backend", "version": 1}

    def test_malformed_line_answered_with_minus_one(self):
        out = self.run_server(["garbage", '{"op": "x"}', '{"id": "three"}'])
        assert [msg["id"] for msg in out[1:]] == [-1, -1, -1]
        assert all(msg["error"] for msg in out[1:])

    def test_handler_exception_becomes_error_response(self):
        out = self.run_server(['{"id": 1, "op": "boom"}', '{"id": 2, "op": "fine"}'])
        assert out[1] == {"id": 1, "error": "handler exploded"}
        assert out[2] == {"id": 2, "echo": "fine"}


class TestTransportSpec:
    def test_unknown_spec(self):
        with pytest.raises(ValueError):
            open_transport("carrier-pigeon:coop")
