"""Synthetic speech corpora for tests, demos, and simulator calibration.

Waveforms are deterministic stand-ins for speech: per-token tone bursts at a
controlled amplitude, optionally preceded by a loud noise onset or replaced
by silence or full-length noise. References are sentences of distinct
pseudo-words, so alignment and vector math behave predictably. Everything is
seeded; rebuilding a corpus reproduces it byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import Waveform, save_audio
from .corpus import Corpus, IngestOptions, load_manifest

_SYLLABLES = ("ba", "de", "ki", "lo", "mu", "na", "po", "re", "si", "ta", "vo", "zu")
_POOL_SYLLABLES = ("cha", "fen", "gor", "hil", "jam", "kel", "mor", "nep", "quo", "rud", "sev", "wix")


def make_vocabulary(size: int, pool: bool = False) -> list[str]:
    """Deterministic pseudo-word list; pool=True uses a disjoint syllable set."""
    syllables = _POOL_SYLLABLES if pool else _SYLLABLES
    words: list[str] = []
    for first in syllables:
        for second in syllables:
            words.append(first + second)
            if len(words) == size:
                return words
    for first in syllables:
        for second in syllables:
            for third in syllables:
                words.append(first + second + third)
                if len(words) == size:
                    return words
    raise ValueError(f"vocabulary size {size} too large for the syllable inventory")


def make_sentences(
    vocab: list[str],
    count: int,
    rng: np.random.Generator,
    min_len: int = 6,
    max_len: int = 9,
) -> list[str]:
    """Sentences of distinct in-vocabulary tokens (no consecutive repeats)."""
    sentences = []
    for _ in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        picks = rng.choice(len(vocab), size=length, replace=False)
        sentences.append(" ".join(vocab[int(i)] for i in picks))
    return sentences


def _token_frequency(token: str) -> float:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=4).digest()
    return 180.0 + (int.from_bytes(digest, "little") % 1200)


def speech_waveform(reference: str, sample_rate: int, duration_s: float, amplitude: float) -> np.ndarray:
    """Tone-burst pseudo-speech: one sine burst per token, short gaps between."""
    total = int(round(duration_s * sample_rate))
    tokens = reference.split() or ["uh"]
    burst = max(1, int(total / len(tokens) * 0.9))
    gap = max(0, int(total / len(tokens)) - burst)
    samples = np.zeros(total)
    pos = 0
    for token in tokens:
        if pos >= total:
            break
        n = min(burst, total - pos)
        t = np.arange(n) / sample_rate
        samples[pos : pos + n] = amplitude * np.sin(2 * np.pi * _token_frequency(token) * t)
        pos += n + gap
    return samples


@dataclass(frozen=True)
class AudioProfile:
    """How one utterance's audio is synthesized."""

    kind: str = "speech"  # speech | silence | noise | onset_burst
    amplitude: float = 0.2
    onset_amplitude: float = 0.9
    onset_duration_s: float = 1.0


def synth_waveform(
    reference: str,
    profile: AudioProfile,
    sample_rate: int,
    duration_s: float,
    seed: int,
) -> Waveform:
    rng = np.random.Generator(np.random.PCG64(seed))
    total = int(round(duration_s * sample_rate))
    if profile.kind == "silence":
        samples = np.zeros(total)
    elif profile.kind == "noise":
        samples = rng.uniform(-profile.amplitude, profile.amplitude, total)
    elif profile.kind == "onset_burst":
        samples = speech_waveform(reference, sample_rate, duration_s, profile.amplitude)
        k = min(total, int(round(profile.onset_duration_s * sample_rate)))
        samples[:k] = rng.uniform(-profile.onset_amplitude, profile.onset_amplitude, k)
    elif profile.kind == "speech":
        samples = speech_waveform(reference, sample_rate, duration_s, profile.amplitude)
    else:
        raise ValueError(f"unknown audio profile kind {profile.kind!r}")
    return Waveform(samples=np.clip(samples, -1.0, 1.0), sample_rate=sample_rate)


def build_corpus(
    out_dir: str | Path,
    references: list[str],
    profiles: list[AudioProfile] | AudioProfile,
    sample_rate: int = 8000,
    duration_s: float = 2.5,
    seed: int = 0,
    name: str = "synth",
) -> Corpus:
    """Write WAVs plus a TSV manifest and load it back as a Corpus."""
    out = Path(out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    if isinstance(profiles, AudioProfile):
        profiles = [profiles] * len(references)
    if len(profiles) != len(references):
        raise ValueError("profiles and references must be parallel")
    manifest_path = out / f"{name}.tsv"
    with manifest_path.open("w", encoding="utf-8", newline="\n") as fh:
        for i, (reference, profile) in enumerate(zip(references, profiles)):
            utt_id = f"{name}-{i:05d}"
            wave = synth_waveform(reference, profile, sample_rate, duration_s, seed=seed + i)
            wav_path = out / "audio" / f"{utt_id}.wav"
            save_audio(wav_path, wave, encoding="pcm16")
            fh.write(f"{utt_id}\taudio/{utt_id}.wav\t{reference}\n")
    return load_manifest(manifest_path, IngestOptions())
