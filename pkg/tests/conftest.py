"""Shared corpus factories and simulator calibrations for the test suite."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from halluprobe.backend import SimBackendConfig
from halluprobe.corpus import Corpus
from halluprobe.detector import MetricSuite
from halluprobe.lm import SmoothingConfig
from halluprobe.synth import AudioProfile, build_corpus, make_sentences, make_vocabulary
from halluprobe.taxonomy import Thresholds

SAMPLE_RATE = 8000
DURATION_S = 2.5

SPEECH = AudioProfile(kind="speech", amplitude=0.2)
SILENCE = AudioProfile(kind="silence")
LOUD_NOISE = AudioProfile(kind="noise", amplitude=0.8)
ONSET_BURST = AudioProfile(kind="onset_burst", amplitude=0.05, onset_amplitude=0.9, onset_duration_s=1.0)


def pool_sentences(count: int = 12, seed: int = 99) -> list[str]:
    rng = np.random.Generator(np.random.PCG64(seed))
    return make_sentences(make_vocabulary(40, pool=True), count, rng, min_len=6, max_len=9)


def metric_suite_for(corpus: Corpus, pool: list[str]) -> MetricSuite:
    """TF-IDF over the corpus references; LM trained on references + pool so
    memorized pool sentences count as fluent."""
    return MetricSuite.build(
        corpus,
        lm_texts=[u.reference for u in corpus] + pool,
        lm_order=2,
        lm_smoothing=SmoothingConfig(k=0.1, min_count=1),
    )


@dataclass(frozen=True)
class PlantedSetup:
    corpus: Corpus
    config: SimBackendConfig
    metrics: MetricSuite
    thresholds: Thresholds
    pool: list[str]
    profiles: list[AudioProfile]


@pytest.fixture(scope="session")
def fidelity_setup(tmp_path_factory) -> PlantedSetup:
    """600 utterances with known pathologies.

    Audio shape drives the class: silence stays clean, full-length loud noise
    drives heavy phonetic confusion, and a loud onset over a quiet body
    triggers the memorized-pool branch (p_halluc = 1 there, so hallucination
    plants are exact). Oscillations sprinkle over the non-hallucinated groups
    via p_osc. References are 8-9 distinct tokens so even the smallest
    oscillation append (3 copies of a unigram) crosses the 30 WER threshold.
    """
    rng = np.random.Generator(np.random.PCG64(41))
    vocab = make_vocabulary(120)
    references = make_sentences(vocab, 600, rng, min_len=8, max_len=9)
    profiles: list[AudioProfile] = []
    for i in range(600):
        slot = i % 10
        if slot < 4:
            profiles.append(SILENCE)
        elif slot < 7:
            profiles.append(LOUD_NOISE)
        else:
            profiles.append(ONSET_BURST)
    corpus = build_corpus(
        tmp_path_factory.mktemp("fidelity"),
        references,
        profiles,
        sample_rate=SAMPLE_RATE,
        duration_s=DURATION_S,
        seed=500,
        name="fidelity",
    )
    pool = pool_sentences()
    config = SimBackendConfig(
        base_confusion_rate=0.0,
        noise_sensitivity=2.9,
        p_halluc=1.0,
        p_osc=0.18,
        memorized_pool=tuple(pool),
        energy_threshold=0.05,
        seed=7,
    )
    return PlantedSetup(
        corpus=corpus,
        config=config,
        metrics=metric_suite_for(corpus, pool),
        thresholds=Thresholds(),
        pool=pool,
        profiles=profiles,
    )


@pytest.fixture(scope="session")
def speech_corpus_500(tmp_path_factory) -> Corpus:
    """Clean pseudo-speech corpus used by the detector monotonicity runs."""
    rng = np.random.Generator(np.random.PCG64(17))
    references = make_sentences(make_vocabulary(120), 500, rng, min_len=8, max_len=9)
    return build_corpus(
        tmp_path_factory.mktemp("speech500"),
        references,
        SPEECH,
        sample_rate=SAMPLE_RATE,
        duration_s=DURATION_S,
        seed=900,
        name="speech500",
    )


def small_speech_corpus(out_dir: Path, n: int = 20, seed: int = 3) -> Corpus:
    rng = np.random.Generator(np.random.PCG64(seed))
    references = make_sentences(make_vocabulary(60), n, rng, min_len=6, max_len=9)
    return build_corpus(
        out_dir, references, SPEECH, sample_rate=SAMPLE_RATE, duration_s=DURATION_S, seed=seed, name="small"
    )
