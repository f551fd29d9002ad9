"""Error taxonomy: threshold classification and oscillation detection.

An output is CLEAN when its WER is at or below the WER threshold. Above it,
a structurally repeating n-gram marks an OSCILLATION; otherwise low cosine
splits into HALLUCINATION (fluent, low perplexity) versus DISFLUENT_ERROR
(word salad), and everything else is a PHONETIC_ERROR. The oscillation check
runs first because a repeated-n-gram signature is independent of the vector
representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import NonFiniteInputError


class ErrorClass(str, Enum):
    CLEAN = "CLEAN"
    PHONETIC_ERROR = "PHONETIC_ERROR"
    OSCILLATION = "OSCILLATION"
    HALLUCINATION = "HALLUCINATION"
    DISFLUENT_ERROR = "DISFLUENT_ERROR"


@dataclass(frozen=True)
class Thresholds:
    t_wer: float = 30.0
    t_cos: float = 0.2
    t_ppl: float = 200.0

    def __post_init__(self) -> None:
        if self.t_wer <= 0:
            raise ValueError("t_wer must be positive")
        if not 0.0 <= self.t_cos <= 1.0:
            raise ValueError("t_cos must lie in [0, 1]")
        if self.t_ppl <= 0:
            raise ValueError("t_ppl must be positive")


@dataclass(frozen=True)
class OscillationConfig:
    min_ngram: int = 1
    min_repeats: int = 3

    def __post_init__(self) -> None:
        if self.min_ngram < 1:
            raise ValueError("min_ngram must be >= 1")
        if self.min_repeats < 3:
            raise ValueError("min_repeats must be >= 3")


@dataclass(frozen=True)
class OscillationResult:
    detected: bool
    ngram: tuple[str, ...] = ()
    repeats: int = 0

    def __bool__(self) -> bool:
        return self.detected


def detect_oscillation(hyp: Sequence[str], cfg: OscillationConfig | None = None) -> OscillationResult:
    """Find an n-gram of length >= min_ngram repeated consecutively >= min_repeats times.

    Reports the shortest qualifying n-gram at its leftmost position, with the
    full consecutive repeat count.
    """
    cfg = cfg or OscillationConfig()
    length = len(hyp)
    max_n = length // cfg.min_repeats
    for n in range(cfg.min_ngram, max_n + 1):
        for start in range(0, length - n * cfg.min_repeats + 1):
            gram = tuple(hyp[start : start + n])
            repeats = 1
            pos = start + n
            while pos + n <= length and tuple(hyp[pos : pos + n]) == gram:
                repeats += 1
                pos += n
            if repeats >= cfg.min_repeats:
                return OscillationResult(detected=True, ngram=gram, repeats=repeats)
    return OscillationResult(detected=False)


def classify(
    wer: float,
    cos: float | None,
    ppl: float | None,
    oscillating: bool,
    thresholds: Thresholds | None = None,
) -> ErrorClass:
    """Map one output's metric tuple to exactly one error class.

    cos and ppl may be None only when wer <= t_wer (they are not needed to
    call an output CLEAN).
    """
    th = thresholds or Thresholds()
    for name, value in (("wer", wer), ("cos", cos), ("ppl", ppl)):
        if value is not None and not math.isfinite(value):
            raise NonFiniteInputError(f"{name} is not finite: {value!r}")
    if wer <= th.t_wer:
        return ErrorClass.CLEAN
    if oscillating:
        return ErrorClass.OSCILLATION
    if cos is None or ppl is None:
        raise NonFiniteInputError("cos and ppl are required to classify a high-WER output")
    if cos < th.t_cos:
        return ErrorClass.HALLUCINATION if ppl < th.t_ppl else ErrorClass.DISFLUENT_ERROR
    return ErrorClass.PHONETIC_ERROR
