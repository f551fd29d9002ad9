"""halluprobe: detect, classify, and induce hallucinations in ASR outputs."""

from .alignment import Alignment, align, wer, word_error_rate
from .audio import Waveform, load_audio, save_audio
from .backend import Backend, ExternalBackend, SimBackendConfig, SimulatedBackend, sim_transcribe
from .corpus import Corpus, IngestOptions, Utterance, load_manifest, validate_corpus, write_manifest
from .corruptor import CorruptionManifest, CorruptionScheme, SchemeKind, corrupt
from .detector import (
    DetectionReport,
    EvalRecord,
    MetricSuite,
    Phase,
    compare_distributions,
    detect,
    evaluate_corpus,
)
from .lm import ExternalLmProvider, NgramLanguageModel, SmoothingConfig, perplexity, train_ngram_lm
from .perturb import MixMode, NoiseSpec, Placement, gen_noise, inject_begin, inject_whole
from .provenance import TfIdfIndex, build_index, provenance_report, query_top_k
from .taxonomy import ErrorClass, OscillationConfig, Thresholds, classify, detect_oscillation
from .textnorm import normalize_text, tokenize
from .textscores import bleu, chrf2, corpus_bleu, corpus_chrf2, rouge1
from .vectorspace import SparseVector, Vectorizer, cosine_similarity

__version__ = "0.1.0"
