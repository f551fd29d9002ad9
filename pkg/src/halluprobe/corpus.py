"""Corpus model and manifest ingestion.

A corpus is an ordered list of utterances read from a TSV manifest
(``id<TAB>audio_path<TAB>transcript``, UTF-8, one utterance per line).
References are normalized at load time so every downstream consumer sees one
token space. Corpus and Utterance values are immutable and safe to share.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import load_audio, wav_duration_seconds
from .errors import DuplicateIdError, MalformedLineError, MissingFileError, ToolkitError
from .textnorm import normalize_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Utterance:
    id: str
    audio_path: Path
    reference: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("utterance id must be non-empty")


@dataclass(frozen=True)
class IngestOptions:
    normalize: bool = True
    # resolve relative audio paths against the manifest's directory
    resolve_paths: bool = True
    # stat every audio file during load instead of deferring to validation
    require_audio: bool = False


@dataclass(frozen=True)
class Corpus:
    name: str
    utterances: tuple[Utterance, ...]
    _by_id: dict[str, Utterance] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[str, Utterance] = {}
        for utt in self.utterances:
            if utt.id in index:
                raise DuplicateIdError(utt.id)
            index[utt.id] = utt
        object.__setattr__(self, "_by_id", index)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def get(self, utterance_id: str) -> Utterance:
        return self._by_id[utterance_id]

    def total_hours(self) -> float:
        """Sum of audio durations, read from WAV headers on demand."""
        return sum(wav_duration_seconds(u.audio_path) for u in self.utterances) / 3600.0

    def with_utterances(self, utterances: tuple[Utterance, ...], name: str | None = None) -> "Corpus":
        return Corpus(name=name or self.name, utterances=utterances)


def load_manifest(path: str | Path, options: IngestOptions | None = None) -> Corpus:
    """Read a TSV manifest into a Corpus, preserving file order."""
    options = options or IngestOptions()
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"manifest not found: {path}")
    base = path.parent
    utterances: list[Utterance] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedLineError(line_no, f"expected 3 tab-separated fields, got {len(parts)}")
            utt_id, audio, transcript = parts
            if not utt_id:
                raise MalformedLineError(line_no, "empty utterance id")
            if utt_id in seen:
                raise DuplicateIdError(utt_id)
            seen.add(utt_id)
            audio_path = Path(audio)
            if options.resolve_paths and not audio_path.is_absolute():
                audio_path = base / audio_path
            if options.require_audio and not audio_path.is_file():
                raise MissingFileError(f"audio file missing for {utt_id!r}: {audio_path}")
            reference = normalize_text(transcript) if options.normalize else transcript
            utterances.append(Utterance(id=utt_id, audio_path=audio_path, reference=reference))
    logger.info("loaded %d utterances from %s", len(utterances), path)
    return Corpus(name=path.stem, utterances=tuple(utterances))


def write_manifest(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in the TSV manifest format."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for utt in corpus:
            fh.write(f"{utt.id}\t{utt.audio_path}\t{utt.reference}\n")


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    utterance_id: str
    detail: str = ""

    def __str__(self) -> str:
        tail = f": {self.detail}" if self.detail else ""
        return f"{self.kind}({self.utterance_id}){tail}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_corpus(corpus: Corpus, check_audio: bool = True) -> ValidationReport:
    """Report empty references, unreadable audio, amplitude and rate problems.

    Problems are report entries, never exceptions; the corpus is unchanged.
    """
    issues: list[ValidationIssue] = []
    rates: dict[int, int] = {}
    waveform_cache: dict[str, object] = {}
    for utt in corpus:
        if not utt.reference.strip():
            issues.append(ValidationIssue("EmptyReference", utt.id))
        if not check_audio:
            continue
        try:
            wave = load_audio(utt.audio_path)
        except ToolkitError as exc:
            issues.append(ValidationIssue("UnreadableAudio", utt.id, str(exc)))
            continue
        waveform_cache[utt.id] = wave
        rates[wave.sample_rate] = rates.get(wave.sample_rate, 0) + 1
        peak = float(np.max(np.abs(wave.samples))) if len(wave) else 0.0
        if peak > 1.0:
            issues.append(ValidationIssue("AmplitudeOutOfRange", utt.id, f"peak {peak:.6g}"))
    if check_audio and len(rates) > 1:
        majority_rate = max(sorted(rates), key=lambda r: rates[r])
        for utt in corpus:
            wave = waveform_cache.get(utt.id)
            if wave is not None and wave.sample_rate != majority_rate:
                issues.append(
                    ValidationIssue(
                        "SampleRateMismatch", utt.id, f"{wave.sample_rate} Hz vs majority {majority_rate} Hz"
                    )
                )
    return ValidationReport(issues=tuple(issues))
