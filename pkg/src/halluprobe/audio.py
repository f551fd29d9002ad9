"""Waveform type and RIFF/WAVE decoding.

Only two encodings are accepted: 16-bit signed integer PCM and 32-bit IEEE
float, mono or multi-channel (downmixed by channel averaging). The parser is
deliberately hand-rolled so header problems map to precise errors and the
integer rescale stays bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptHeaderError, EmptyAudioError, MissingFileError, UnsupportedFormatError

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3
_INT16_SCALE = 32768.0


@dataclass(frozen=True)
class Waveform:
    """Mono audio on the digital amplitude scale [-1, 1].

    The sample array is frozen at construction; perturbations always produce
    new Waveform values. Samples are not range-checked here because a decoded
    float file may legitimately carry out-of-range values, which corpus
    validation reports as issues.
    """

    samples: np.ndarray = field(repr=False)
    sample_rate: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("Waveform samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_seconds(self) -> float:
        return len(self) / self.sample_rate

    def content_key(self) -> bytes:
        """Stable digest of (sample_rate, samples), used for seeding and lookup."""
        import hashlib

        h = hashlib.blake2b(digest_size=16)
        h.update(struct.pack("<q", self.sample_rate))
        h.update(self.samples.tobytes())
        return h.digest()


def _read_exact(data: bytes, offset: int, count: int, what: str) -> bytes:
    chunk = data[offset : offset + count]
    if len(chunk) != count:
        raise CorruptHeaderError(f"truncated WAV file while reading {what}")
    return chunk


def load_audio(path: str | Path) -> Waveform:
    """Decode a RIFF/WAVE file into a mono [-1, 1] waveform.

    Integer PCM is rescaled by the type's maximum magnitude (32768 for
    int16), so -32768 maps exactly to -1.0. Multi-channel audio is downmixed
    by averaging channels.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"audio file not found: {path}")
    data = path.read_bytes()
    if len(data) < 12:
        raise CorruptHeaderError(f"not a RIFF file (too short): {path}")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"not a RIFF/WAVE file: {path}")

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack("<I", data[offset + 4 : offset + 8])
        body_start = offset + 8
        if chunk_id == b"fmt ":
            body = _read_exact(data, body_start, min(chunk_size, 16), "fmt chunk")
            if len(body) < 16:
                raise CorruptHeaderError(f"fmt chunk too small: {path}")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            payload = _read_exact(data, body_start, chunk_size, "data chunk")
        # chunks are word-aligned
        offset = body_start + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise CorruptHeaderError(f"missing fmt chunk: {path}")
    if payload is None:
        raise CorruptHeaderError(f"missing data chunk: {path}")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels < 1:
        raise CorruptHeaderError(f"invalid channel count {channels}: {path}")

    if audio_format == _FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * channels)], dtype="<i2")
        samples = raw.astype(np.float64) / _INT16_SCALE
    elif audio_format == _FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * channels)], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"unsupported WAV encoding (format={audio_format}, bits={bits}); "
            f"only 16-bit PCM and 32-bit float are accepted: {path}"
        )

    if samples.size == 0:
        raise EmptyAudioError(f"WAV file contains no samples: {path}")
    if channels > 1:
        usable = samples.size - samples.size % channels
        samples = samples[:usable].reshape(-1, channels).mean(axis=1)
        if samples.size == 0:
            raise EmptyAudioError(f"WAV file contains no complete frames: {path}")
    return Waveform(samples=samples, sample_rate=int(sample_rate))


def save_audio(path: str | Path, waveform: Waveform, encoding: str = "pcm16") -> None:
    """Write a waveform as RIFF/WAVE, ``pcm16`` or ``float32``.

    pcm16 quantizes by 32768 with clipping at the int16 limits, so a decoded
    file re-encodes bit-exactly.
    """
    path = Path(path)
    if encoding == "pcm16":
        scaled = np.clip(np.rint(waveform.samples * _INT16_SCALE), -32768, 32767)
        payload = scaled.astype("<i2").tobytes()
        audio_format, bits = _FORMAT_PCM, 16
    elif encoding == "float32":
        payload = waveform.samples.astype("<f4").tobytes()
        audio_format, bits = _FORMAT_IEEE_FLOAT, 32
    else:
        raise UnsupportedFormatError(f"unsupported output encoding {encoding!r}")

    block_align = bits // 8
    header = b"".join(
        [
            b"RIFF",
            struct.pack("<I", 36 + len(payload)),
            b"WAVE",
            b"fmt ",
            struct.pack("<I", 16),
            struct.pack(
                "<HHIIHH",
                audio_format,
                1,
                waveform.sample_rate,
                waveform.sample_rate * block_align,
                block_align,
                bits,
            ),
            b"data",
            struct.pack("<I", len(payload)),
        ]
    )
    path.write_bytes(header + payload)


def wav_encoding(path: str | Path) -> str:
    """Peek at the fmt chunk: ``pcm16`` or ``float32``."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"audio file not found: {path}")
    data = path.read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"not a RIFF/WAVE file: {path}")
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack("<I", data[offset + 4 : offset + 8])
        if chunk_id == b"fmt ":
            body = _read_exact(data, offset + 8, min(chunk_size, 16), "fmt chunk")
            if len(body) < 16:
                raise CorruptHeaderError(f"fmt chunk too small: {path}")
            audio_format, _ch, _sr, _br, _ba, bits = struct.unpack("<HHIIHH", body[:16])
            if audio_format == _FORMAT_PCM and bits == 16:
                return "pcm16"
            if audio_format == _FORMAT_IEEE_FLOAT and bits == 32:
                return "float32"
            raise UnsupportedFormatError(f"unsupported WAV encoding (format={audio_format}, bits={bits}): {path}")
        offset += 8 + chunk_size + (chunk_size & 1)
    raise CorruptHeaderError(f"missing fmt chunk: {path}")


def wav_duration_seconds(path: str | Path) -> float:
    """Duration from the WAV header without decoding the sample payload."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"audio file not found: {path}")
    with path.open("rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[0:4] != b"RIFF" or head[8:12] != b"WAVE":
            raise CorruptHeaderError(f"not a RIFF/WAVE file: {path}")
        fmt = None
        data_size = None
        while True:
            chunk_head = fh.read(8)
            if len(chunk_head) < 8:
                break
            chunk_id = chunk_head[:4]
            (chunk_size,) = struct.unpack("<I", chunk_head[4:8])
            if chunk_id == b"fmt ":
                body = fh.read(min(chunk_size, 16))
                if len(body) < 16:
                    raise CorruptHeaderError(f"fmt chunk too small: {path}")
                fmt = struct.unpack("<HHIIHH", body[:16])
                fh.seek(chunk_size - len(body) + (chunk_size & 1), 1)
            else:
                if chunk_id == b"data":
                    data_size = chunk_size
                fh.seek(chunk_size + (chunk_size & 1), 1)
    if fmt is None or data_size is None:
        raise CorruptHeaderError(f"missing fmt or data chunk: {path}")
    _audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    frame_bytes = max(1, channels * (bits // 8))
    return (data_size // frame_bytes) / sample_rate
