"""ASR backend abstraction and the deterministic pathology simulator.

Every transcription flows through the Backend protocol: the built-in
simulator runs in process, external recognizers attach over the JSON-lines
wire protocol (``exec:<command>`` or ``tcp:<host:port>``).

The simulator is a reference-aware oracle recognizer with injected
pathologies: it mostly transcribes correctly, degrades phonetically with
audio energy, and regurgitates memorized pool sentences when an utterance
shows a loud onset over an otherwise quiet signal. That onset-selective
trigger is what makes noise at the start of an utterance induce
hallucinations while uniformly noisy audio only degrades phonetically. All
draws are keyed on (config seed, reference, waveform content), never on the
probability parameters, so runs that differ only in a probability are
coupled sample-by-sample.
"""

from __future__ import annotations

import base64
import hashlib
import string
import struct
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .audio import Waveform
from .corpus import Utterance
from .errors import BackendError, BackendUnreachableError, InvalidConfigError, ProtocolViolationError
from .taxonomy import ErrorClass
from .textnorm import normalize_text
from .wire import HELLO_ASR, JsonLinesClient, open_transport

# Phonetically close word pairs; unknown words fall back to character mangling.
CONFUSION_PAIRS: tuple[tuple[str, str], ...] = (
    ("fifth", "fifths"),
    ("there", "their"),
    ("to", "two"),
    ("for", "four"),
    ("sea", "see"),
    ("night", "knight"),
    ("write", "right"),
    ("hear", "here"),
    ("whether", "weather"),
    ("piece", "peace"),
    ("plain", "plane"),
    ("board", "bored"),
    ("one", "won"),
    ("ate", "eight"),
    ("meet", "meat"),
    ("sun", "son"),
    ("tale", "tail"),
    ("wait", "weight"),
    ("week", "weak"),
    ("wood", "would"),
    ("allowed", "aloud"),
    ("bear", "bare"),
    ("fair", "fare"),
    ("flower", "flour"),
    ("mail", "male"),
)

_CONFUSION_MAP: dict[str, str] = {}
for _a, _b in CONFUSION_PAIRS:
    _CONFUSION_MAP[_a] = _b
    _CONFUSION_MAP[_b] = _a


class Backend(Protocol):
    """Anything that turns a waveform into a transcript."""

    def transcribe(self, waveform: Waveform, utterance: Utterance | None = None) -> str: ...


def transcribe(backend: Backend, waveform: Waveform, utterance: Utterance | None = None) -> str:
    return backend.transcribe(waveform, utterance)


@dataclass(frozen=True)
class SimBackendConfig:
    base_confusion_rate: float = 0.0
    noise_sensitivity: float = 0.0
    p_halluc: float = 0.0
    p_osc: float = 0.0
    memorized_pool: tuple[str, ...] = ()
    energy_threshold: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("base_confusion_rate", "p_halluc", "p_osc"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.noise_sensitivity < 0:
            raise InvalidConfigError("noise_sensitivity must be >= 0")
        if self.energy_threshold < 0:
            raise InvalidConfigError("energy_threshold must be >= 0")
        if self.p_halluc > 0 and not self.memorized_pool:
            raise InvalidConfigError("p_halluc > 0 requires a non-empty memorized_pool")
        object.__setattr__(
            self, "memorized_pool", tuple(normalize_text(s) for s in self.memorized_pool)
        )

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimBackendConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown simulator config keys: {sorted(unknown)}")
        if "memorized_pool" in data:
            data = {**data, "memorized_pool": tuple(data["memorized_pool"])}
        return cls(**data)


@dataclass(frozen=True)
class SimOutcome:
    """Transcript plus the ground-truth pathology the simulator applied."""

    transcript: str
    planted: ErrorClass
    substituted: int = 0
    oscillation_ngram: tuple[str, ...] = ()


def _rng_for(cfg_seed: int, reference: str, waveform: Waveform) -> np.random.Generator:
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", cfg_seed))
    h.update(reference.encode("utf-8"))
    h.update(waveform.content_key())
    return np.random.Generator(np.random.PCG64(struct.unpack("<Q", h.digest())[0]))


def _onset_and_rest_energy(waveform: Waveform) -> tuple[float, float]:
    split = min(waveform.sample_rate, len(waveform))
    onset = waveform.samples[:split]
    rest = waveform.samples[split:]
    onset_e = float(np.mean(onset * onset)) if onset.size else 0.0
    rest_e = float(np.mean(rest * rest)) if rest.size else 0.0
    return onset_e, rest_e


def _mangle_token(token: str, rng: np.random.Generator) -> str:
    letters = string.ascii_lowercase
    if not token:
        return "uh"
    for _ in range(8):
        op = int(rng.integers(0, 3))
        pos = int(rng.integers(0, len(token)))
        if op == 0 and len(token) > 1:
            candidate = token[:pos] + token[pos + 1 :]
        elif op == 1:
            candidate = token[:pos] + token[pos] + token[pos:]
        else:
            candidate = token[:pos] + letters[int(rng.integers(0, 26))] + token[pos + 1 :]
        if candidate != token:
            return candidate
    return token + "a"


def _confuse_token(token: str, rng: np.random.Generator) -> str:
    mapped = _CONFUSION_MAP.get(token)
    if mapped is not None:
        return mapped
    return _mangle_token(token, rng)


def sim_transcribe(cfg: SimBackendConfig, waveform: Waveform, reference: str) -> SimOutcome:
    """Deterministic simulated transcription of one utterance.

    Branch order is fixed so draws stay aligned across configs sharing a
    seed: the hallucination uniform first, the oscillation uniform second,
    then per-token confusion draws.
    """
    rng = _rng_for(cfg.seed, reference, waveform)
    u_halluc = float(rng.random())
    u_osc = float(rng.random())

    onset_e, rest_e = _onset_and_rest_energy(waveform)
    whole = waveform.samples
    whole_e = float(np.mean(whole * whole)) if whole.size else 0.0

    onset_triggered = onset_e > cfg.energy_threshold and rest_e <= cfg.energy_threshold
    if onset_triggered and u_halluc < cfg.p_halluc:
        pick = int(rng.integers(0, len(cfg.memorized_pool)))
        return SimOutcome(transcript=cfg.memorized_pool[pick], planted=ErrorClass.HALLUCINATION)

    tokens = reference.split()
    confusion = min(1.0, max(0.0, cfg.base_confusion_rate + cfg.noise_sensitivity * whole_e))
    substituted = 0
    out_tokens: list[str] = []
    for tok in tokens:
        if confusion > 0.0 and float(rng.random()) < confusion:
            out_tokens.append(_confuse_token(tok, rng))
            substituted += 1
        else:
            out_tokens.append(tok)

    osc_ngram: tuple[str, ...] = ()
    if out_tokens and u_osc < cfg.p_osc:
        n = int(rng.integers(1, min(3, len(out_tokens)) + 1))
        start = int(rng.integers(0, len(out_tokens) - n + 1))
        repeats = int(rng.integers(3, 9))
        osc_ngram = tuple(out_tokens[start : start + n])
        out_tokens.extend(list(osc_ngram) * repeats)

    if osc_ngram:
        planted = ErrorClass.OSCILLATION
    elif substituted:
        planted = ErrorClass.PHONETIC_ERROR
    else:
        planted = ErrorClass.CLEAN
    return SimOutcome(
        transcript=" ".join(out_tokens),
        planted=planted,
        substituted=substituted,
        oscillation_ngram=osc_ngram,
    )


class SimulatedBackend:
    """In-process Backend over sim_transcribe; pure and thread-safe."""

    def __init__(self, cfg: SimBackendConfig) -> None:
        self.cfg = cfg

    def transcribe(self, waveform: Waveform, utterance: Utterance | None = None) -> str:
        if utterance is None:
            raise InvalidConfigError("the simulated backend needs the utterance for its reference")
        return sim_transcribe(self.cfg, waveform, utterance.reference).transcript

    def outcome(self, waveform: Waveform, utterance: Utterance) -> SimOutcome:
        return sim_transcribe(self.cfg, waveform, utterance.reference)


def encode_pcm_f32(waveform: Waveform) -> str:
    return base64.b64encode(waveform.samples.astype("<f4").tobytes()).decode("ascii")


def decode_pcm_f32(payload: str, sample_rate: int) -> Waveform:
    raw = base64.b64decode(payload.encode("ascii"), validate=True)
    samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return Waveform(samples=samples, sample_rate=sample_rate)


class ExternalBackend:
    """Backend over the wire protocol, with reconnect-and-retry on transport loss.

    A lost connection (process exit, socket close, timeout) is retried up to
    max_attempts with a fresh connection; protocol violations and error
    responses are never retried.
    """

    def __init__(self, transport_spec: str, timeout: float = 60.0, max_attempts: int = 3) -> None:
        self.transport_spec = transport_spec
        self.timeout = timeout
        self.max_attempts = max_attempts
        self._client: JsonLinesClient | None = None

    def _connect(self) -> JsonLinesClient:
        if self._client is None:
            self._client = JsonLinesClient(
                open_transport(self.transport_spec), timeout=self.timeout, expect_hello=HELLO_ASR
            )
        return self._client

    def _drop(self) -> None:
        if self._client is not None:
            try:
                self._client.close()
            finally:
                self._client = None

    def transcribe(self, waveform: Waveform, utterance: Utterance | None = None) -> str:
        payload = {
            "op": "transcribe",
            "sample_rate": waveform.sample_rate,
            "pcm_f32_base64": encode_pcm_f32(waveform),
        }
        last_error: BackendUnreachableError | None = None
        for _ in range(self.max_attempts):
            try:
                response = self._connect().call(payload)
            except BackendUnreachableError as exc:
                last_error = exc
                self._drop()
                continue
            if "error" in response:
                raise BackendError(str(response["error"]))
            transcript = response.get("transcript")
            if not isinstance(transcript, str):
                raise ProtocolViolationError(f"response carries neither transcript nor error: {response!r}")
            return normalize_text(transcript)
        assert last_error is not None
        raise BackendUnreachableError(
            f"backend {self.transport_spec!r} unreachable after {self.max_attempts} attempts: {last_error}"
        )

    def close(self) -> None:
        self._drop()
