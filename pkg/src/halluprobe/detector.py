"""Hallucination detection runs: evaluate, perturb, re-evaluate, score.

The detection loop transcribes every utterance, perturbs only those whose
natural WER falls below the WER threshold (perturbing already-erroneous
audio would say nothing), re-transcribes, and classifies both phases. The
susceptibility score is the natural hallucination rate minus the
post-perturbation hallucination rate, so hallucination-prone systems score
negative. Rates are normalized by the number of utterances entering each
phase. Records with natural WER exactly at the threshold enter neither the
error tally nor the perturbation set; they are counted separately.

Cosine and perplexity are only computed for outputs above the WER threshold
unless full_metrics is set (distribution plots want them everywhere). An
empty hypothesis is classified DISFLUENT_ERROR directly: it has no vector
and no fluency.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .alignment import Alignment, align, wer
from .audio import load_audio
from .backend import Backend
from .corpus import Corpus, Utterance
from .errors import BackendError, BackendUnreachableError, ProtocolViolationError, ToolkitError
from .lm import NgramLanguageModel, PerplexityProvider, SmoothingConfig
from .perturb import NoiseSpec, apply_noise, spec_for_utterance
from .taxonomy import ErrorClass, OscillationConfig, Thresholds, classify, detect_oscillation
from .textnorm import tokenize
from .vectorspace import Vectorizer, cosine_similarity


class Phase(str, Enum):
    NATURAL = "NATURAL"
    PERTURBED = "PERTURBED"


@dataclass(frozen=True)
class MetricSuite:
    """Fitted scoring context shared by every record of a run."""

    vectorizer: Vectorizer
    lm: PerplexityProvider
    osc: OscillationConfig = OscillationConfig()

    @classmethod
    def build(
        cls,
        corpus: Corpus,
        lm: PerplexityProvider | None = None,
        lm_texts: Sequence[str] | None = None,
        lm_order: int = 2,
        lm_smoothing: SmoothingConfig | None = None,
        vector_mode: str = "tfidf",
        osc: OscillationConfig | None = None,
    ) -> "MetricSuite":
        """Fit the vectorizer on the corpus references; train the built-in LM
        on lm_texts (defaulting to those references) unless an LM is given."""
        ref_tokens = [utt.reference.split() for utt in corpus]
        vectorizer = Vectorizer(mode=vector_mode)
        if vector_mode == "tfidf":
            vectorizer.fit(ref_tokens)
        if lm is None:
            texts = [tokenize(t) for t in lm_texts] if lm_texts is not None else ref_tokens
            lm = NgramLanguageModel.train(texts, order=lm_order, smoothing=lm_smoothing)
        return cls(vectorizer=vectorizer, lm=lm, osc=osc or OscillationConfig())


@dataclass(frozen=True)
class EvalRecord:
    utterance_id: str
    phase: Phase
    reference: str
    hypothesis: str | None
    alignment: Alignment | None
    wer: float | None
    cos: float | None
    ppl: float | None
    oscillating: bool
    error_class: ErrorClass | None
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_json_dict(self) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "phase": self.phase.value,
            "reference": self.reference,
            "hypothesis": self.hypothesis,
            "alignment": None
            if self.alignment is None
            else {
                "substitutions": self.alignment.substitutions,
                "insertions": self.alignment.insertions,
                "deletions": self.alignment.deletions,
                "ref_len": self.alignment.ref_len,
            },
            "wer": self.wer,
            "cos": self.cos,
            "ppl": self.ppl,
            "oscillating": self.oscillating,
            "error_class": None if self.error_class is None else self.error_class.value,
            "failure": self.failure,
        }


def score_hypothesis(
    utterance: Utterance,
    hypothesis: str,
    metrics: MetricSuite,
    thresholds: Thresholds,
    phase: Phase,
    full_metrics: bool,
) -> EvalRecord:
    """Score one transcript against its reference and classify it."""
    ref_tokens = utterance.reference.split()
    hyp_tokens = tokenize(hypothesis)
    alignment = align(ref_tokens, hyp_tokens)
    wer_value = wer(alignment)
    osc = detect_oscillation(hyp_tokens, metrics.osc)

    cos_value: float | None = None
    ppl_value: float | None = None
    if full_metrics or wer_value > thresholds.t_wer:
        cos_value = cosine_similarity(
            metrics.vectorizer.vectorize(hyp_tokens), metrics.vectorizer.vectorize(ref_tokens)
        )
        if hyp_tokens:
            ppl_value = metrics.lm.sentence_perplexity(hyp_tokens)

    if wer_value > thresholds.t_wer and not hyp_tokens:
        error_class = ErrorClass.DISFLUENT_ERROR
    else:
        error_class = classify(wer_value, cos_value, ppl_value, bool(osc), thresholds)
    return EvalRecord(
        utterance_id=utterance.id,
        phase=phase,
        reference=utterance.reference,
        hypothesis=" ".join(hyp_tokens),
        alignment=alignment,
        wer=wer_value,
        cos=cos_value,
        ppl=ppl_value,
        oscillating=bool(osc),
        error_class=error_class,
        failure=None,
    )


def _failure_record(utterance: Utterance, phase: Phase, message: str) -> EvalRecord:
    return EvalRecord(
        utterance_id=utterance.id,
        phase=phase,
        reference=utterance.reference,
        hypothesis=None,
        alignment=None,
        wer=None,
        cos=None,
        ppl=None,
        oscillating=False,
        error_class=None,
        failure=message,
    )


BackendFactory = Callable[[], Backend]


class _BackendPool:
    """One backend handle per worker thread; a bare backend is shared."""

    def __init__(self, backend: Backend | BackendFactory) -> None:
        import threading

        self._factory = backend if callable(backend) and not hasattr(backend, "transcribe") else None
        self._shared: Backend | None = None if self._factory else backend  # type: ignore[assignment]
        self._local = threading.local()

    def get(self) -> Backend:
        if self._shared is not None:
            return self._shared
        handle = getattr(self._local, "backend", None)
        if handle is None:
            assert self._factory is not None
            handle = self._factory()
            self._local.backend = handle
        return handle


def _run_items(items: Sequence, worker: Callable, jobs: int) -> list:
    if jobs <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


def evaluate_corpus(
    backend: Backend | BackendFactory,
    corpus: Corpus,
    metrics: MetricSuite,
    thresholds: Thresholds | None = None,
    jobs: int = 1,
    full_metrics: bool = True,
) -> list[EvalRecord]:
    """One NATURAL-phase record per utterance, in corpus order.

    Backend failures on single utterances become failure records; only a
    completely unreachable backend aborts the run.
    """
    th = thresholds or Thresholds()
    pool = _BackendPool(backend)

    def worker(utterance: Utterance) -> EvalRecord:
        try:
            waveform = load_audio(utterance.audio_path)
            hypothesis = pool.get().transcribe(waveform, utterance)
            return score_hypothesis(utterance, hypothesis, metrics, th, Phase.NATURAL, full_metrics)
        except (BackendUnreachableError, ProtocolViolationError):
            raise
        except (BackendError, ToolkitError) as exc:
            return _failure_record(utterance, Phase.NATURAL, str(exc))

    return _run_items(corpus.utterances, worker, jobs)


@dataclass(frozen=True)
class DetectionReport:
    thresholds: Thresholds
    noise_spec: NoiseSpec
    natural_records: tuple[EvalRecord, ...]
    perturbed_records: tuple[EvalRecord, ...]
    n_evaluated: int
    n_failures: int
    n_perturbed: int
    boundary_wer_count: int
    natural_halluc_rate: float
    perturbed_halluc_rate: float
    susceptibility_score: float

    def class_counts(self, phase: Phase) -> dict[str, int]:
        records = self.natural_records if phase is Phase.NATURAL else self.perturbed_records
        counts = {cls.value: 0 for cls in ErrorClass}
        for record in records:
            if record.error_class is not None:
                counts[record.error_class.value] += 1
        return counts

    def to_json_dict(self) -> dict:
        return {
            "schema": "halluprobe/detection-report/1",
            "thresholds": {
                "t_wer": self.thresholds.t_wer,
                "t_cos": self.thresholds.t_cos,
                "t_ppl": self.thresholds.t_ppl,
            },
            "noise_spec": {
                "placement": self.noise_spec.placement.value,
                "amplitude": self.noise_spec.amplitude,
                "duration_s": self.noise_spec.duration_s,
                "mode": self.noise_spec.mode.value,
                "seed": self.noise_spec.seed,
            },
            "n_evaluated": self.n_evaluated,
            "n_failures": self.n_failures,
            "n_perturbed": self.n_perturbed,
            "boundary_wer_count": self.boundary_wer_count,
            "natural_halluc_rate": self.natural_halluc_rate,
            "perturbed_halluc_rate": self.perturbed_halluc_rate,
            "susceptibility_score": self.susceptibility_score,
            "class_counts": {
                Phase.NATURAL.value: self.class_counts(Phase.NATURAL),
                Phase.PERTURBED.value: self.class_counts(Phase.PERTURBED),
            },
            "natural_records": [r.to_json_dict() for r in self.natural_records],
            "perturbed_records": [r.to_json_dict() for r in self.perturbed_records],
        }


def detect(
    backend: Backend | BackendFactory,
    corpus: Corpus,
    thresholds: Thresholds,
    noise_spec: NoiseSpec,
    metrics: MetricSuite,
    jobs: int = 1,
    full_metrics: bool = False,
) -> DetectionReport:
    """Run the detection loop over a corpus and score susceptibility."""
    pool = _BackendPool(backend)

    def worker(utterance: Utterance) -> tuple[EvalRecord, EvalRecord | None]:
        try:
            waveform = load_audio(utterance.audio_path)
            natural_hyp = pool.get().transcribe(waveform, utterance)
            natural = score_hypothesis(
                utterance, natural_hyp, metrics, thresholds, Phase.NATURAL, full_metrics
            )
        except (BackendUnreachableError, ProtocolViolationError):
            raise
        except (BackendError, ToolkitError) as exc:
            return _failure_record(utterance, Phase.NATURAL, str(exc)), None

        perturbed: EvalRecord | None = None
        assert natural.wer is not None
        if natural.wer < thresholds.t_wer:
            perturbed_wave = apply_noise(waveform, spec_for_utterance(noise_spec, utterance.id))
            try:
                perturbed_hyp = pool.get().transcribe(perturbed_wave, utterance)
                perturbed = score_hypothesis(
                    utterance, perturbed_hyp, metrics, thresholds, Phase.PERTURBED, full_metrics
                )
            except (BackendUnreachableError, ProtocolViolationError):
                raise
            except (BackendError, ToolkitError) as exc:
                perturbed = _failure_record(utterance, Phase.PERTURBED, str(exc))
        return natural, perturbed

    results = _run_items(corpus.utterances, worker, jobs)
    natural_records = tuple(natural for natural, _ in results)
    perturbed_records = tuple(p for _, p in results if p is not None)

    ok_natural = [r for r in natural_records if r.ok]
    ok_perturbed = [r for r in perturbed_records if r.ok]
    n_evaluated = len(ok_natural)
    n_perturbed = len(ok_perturbed)
    natural_hallucs = sum(1 for r in ok_natural if r.error_class is ErrorClass.HALLUCINATION)
    perturbed_hallucs = sum(1 for r in ok_perturbed if r.error_class is ErrorClass.HALLUCINATION)
    boundary = sum(1 for r in ok_natural if r.wer == thresholds.t_wer)

    natural_rate = natural_hallucs / n_evaluated if n_evaluated else 0.0
    perturbed_rate = perturbed_hallucs / n_perturbed if n_perturbed else 0.0
    return DetectionReport(
        thresholds=thresholds,
        noise_spec=noise_spec,
        natural_records=natural_records,
        perturbed_records=perturbed_records,
        n_evaluated=n_evaluated,
        n_failures=len(natural_records) - n_evaluated,
        n_perturbed=n_perturbed,
        boundary_wer_count=boundary,
        natural_halluc_rate=natural_rate,
        perturbed_halluc_rate=perturbed_rate,
        susceptibility_score=natural_rate - perturbed_rate,
    )


def compare_distributions(report: DetectionReport, bins: int = 20) -> "DistributionSummary":
    """Per-phase histograms of WER, cosine, and perplexity plus class counts."""
    from .reporting import HistogramData, histogram

    specs = (("wer", 0.0, 200.0), ("cos", 0.0, 1.0), ("ppl", 0.0, 1000.0))
    histograms: list[HistogramData] = []
    for phase, records in ((Phase.NATURAL, report.natural_records), (Phase.PERTURBED, report.perturbed_records)):
        for metric, lo, hi in specs:
            values = [getattr(r, metric) for r in records if getattr(r, metric) is not None]
            histograms.append(histogram(values, bins=bins, lo=lo, hi=hi, metric=metric, phase=phase.value))
    return DistributionSummary(
        histograms=tuple(histograms),
        class_counts={
            Phase.NATURAL.value: report.class_counts(Phase.NATURAL),
            Phase.PERTURBED.value: report.class_counts(Phase.PERTURBED),
        },
    )


@dataclass(frozen=True)
class DistributionSummary:
    histograms: tuple
    class_counts: dict[str, dict[str, int]]

    def to_json_dict(self) -> dict:
        return {
            "histograms": [h.to_json_dict() for h in self.histograms],
            "class_counts": self.class_counts,
        }
