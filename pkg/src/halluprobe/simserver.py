"""Serve the simulator over the wire protocol, for self-hosting tests.

The served simulator must recover each request's reference transcript from
audio alone, so it indexes the corpus three ways: by audio path, by full
waveform content, and by the waveform's final second (which survives
noise-at-the-beginning perturbation untouched). Audio it cannot attribute is
answered with an error response; the connection stays alive. ``ppl``
requests are answered from the built-in n-gram model trained on the corpus
references, so one process can self-host both protocol roles.
"""

from __future__ import annotations

import hashlib
import socket
import struct
import sys
import threading

from .audio import Waveform, load_audio
from .backend import SimBackendConfig, decode_pcm_f32, sim_transcribe
from .corpus import Corpus, Utterance
from .lm import NgramLanguageModel, SmoothingConfig
from .wire import HELLO_ASR, serve_stream


def _tail_key(waveform: Waveform) -> bytes:
    tail = waveform.samples[-min(waveform.sample_rate, len(waveform)) :]
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<q", waveform.sample_rate))
    h.update(tail.tobytes())
    return h.digest()


class SimulatorService:
    def __init__(
        self,
        cfg: SimBackendConfig,
        corpus: Corpus,
        lm_order: int = 2,
        lm_k: float = 0.1,
    ) -> None:
        self.cfg = cfg
        self._by_path: dict[str, Utterance] = {}
        self._by_content: dict[bytes, Utterance] = {}
        self._by_tail: dict[bytes, Utterance] = {}
        for utt in corpus:
            self._by_path[str(utt.audio_path)] = utt
            wave = load_audio(utt.audio_path)
            self._by_content[wave.content_key()] = utt
            self._by_tail[_tail_key(wave)] = utt
        self._lm = NgramLanguageModel.train(
            [utt.reference.split() for utt in corpus],
            order=lm_order,
            smoothing=SmoothingConfig(k=lm_k, min_count=1),
        )

    def _resolve(self, waveform: Waveform) -> Utterance | None:
        utt = self._by_content.get(waveform.content_key())
        if utt is None:
            utt = self._by_tail.get(_tail_key(waveform))
        return utt

    def handle(self, msg: dict) -> dict:
        op = msg.get("op")
        if op == "transcribe":
            return self._handle_transcribe(msg)
        if op == "ppl":
            return self._handle_ppl(msg)
        return {"error": f"unsupported op {op!r}"}

    def _handle_transcribe(self, msg: dict) -> dict:
        if "pcm_f32_base64" in msg:
            sample_rate = msg.get("sample_rate")
            if not isinstance(sample_rate, int) or sample_rate <= 0:
                return {"error": "transcribe with pcm payload requires a positive integer sample_rate"}
            try:
                waveform = decode_pcm_f32(msg["pcm_f32_base64"], sample_rate)
            except Exception as exc:  # noqa: BLE001
                return {"error": f"undecodable pcm payload: {exc}"}
            utt = self._resolve(waveform)
        elif "audio_path" in msg:
            path = str(msg["audio_path"])
            utt = self._by_path.get(path)
            try:
                waveform = load_audio(path)
            except Exception as exc:  # noqa: BLE001
                return {"error": f"unreadable audio_path: {exc}"}
            if utt is None:
                utt = self._resolve(waveform)
        else:
            return {"error": "transcribe requires pcm_f32_base64 or audio_path"}
        if utt is None:
            return {"error": "audio does not match any corpus utterance"}
        return {"transcript": sim_transcribe(self.cfg, waveform, utt.reference).transcript}

    def _handle_ppl(self, msg: dict) -> dict:
        text = msg.get("text")
        if not isinstance(text, str):
            return {"error": "ppl requires a text field"}
        tokens = text.split()
        if not tokens:
            return {"error": "empty sentence"}
        return {"ppl": self._lm.sentence_perplexity(tokens)}


def serve_stdio(service: SimulatorService) -> None:
    serve_stream(service.handle, HELLO_ASR, sys.stdin.buffer, sys.stdout.buffer)


def serve_tcp(service: SimulatorService, host: str, port: int, ready_event=None, max_connections: int | None = None) -> None:
    """Accept connections forever (or for max_connections), one thread each."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen(8)
    if ready_event is not None:
        ready_event.set()
    served = 0
    try:
        while max_connections is None or served < max_connections:
            conn, _addr = server.accept()
            served += 1

            def run(sock: socket.socket) -> None:
                with sock:
                    rfile = sock.makefile("rb")
                    wfile = sock.makefile("wb")
                    try:
                        serve_stream(service.handle, HELLO_ASR, rfile, wfile)
                    except (BrokenPipeError, ConnectionResetError, OSError):
                        pass

            threading.Thread(target=run, args=(conn,), daemon=True).start()
    finally:
        server.close()
