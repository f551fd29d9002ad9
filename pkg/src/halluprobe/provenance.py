"""Training-label provenance: was a hallucination copied from training data?

A TF-IDF index over the training transcripts answers each hallucinated
output with its five closest transcripts by cosine similarity. A top match
at or above the copy threshold earns the verdict COPIED; anything weaker is
GENERATED. Retrieval is an exact linear scan: desk-scale collections make
approximate indexing pointless and exactness keeps the oracle trivial.
"""

from __future__ import annotations

from dataclasses import dataclass

from .textnorm import tokenize
from .vectorspace import SparseVector, Vectorizer, cosine_similarity
from .errors import EmptyCollectionError

DEFAULT_TOP_K = 5
DEFAULT_COPY_THRESHOLD = 0.95


@dataclass(frozen=True)
class TfIdfIndex:
    vectorizer: Vectorizer
    vectors: dict[str, SparseVector]

    @property
    def document_count(self) -> int:
        return len(self.vectors)


def build_index(texts: dict[str, str]) -> TfIdfIndex:
    """Index a non-empty id -> transcript map; tokenization matches the corpus normalizer."""
    if not texts:
        raise EmptyCollectionError("cannot index an empty transcript collection")
    tokenized = {doc_id: tokenize(text) for doc_id, text in texts.items()}
    vectorizer = Vectorizer(mode="tfidf").fit(tokenized.values())
    vectors = {doc_id: vectorizer.vectorize(toks) for doc_id, toks in tokenized.items()}
    return TfIdfIndex(vectorizer=vectorizer, vectors=vectors)


def query_top_k(index: TfIdfIndex, text: str, k: int = DEFAULT_TOP_K) -> list[tuple[str, float]]:
    """Top-k documents by cosine, descending; ties break by ascending doc id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query = index.vectorizer.vectorize(tokenize(text))
    scored = [(doc_id, cosine_similarity(query, vec)) for doc_id, vec in index.vectors.items()]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


@dataclass(frozen=True)
class ProvenanceEntry:
    utterance_id: str
    hypothesis: str
    candidates: tuple[tuple[str, float], ...]
    verdict: str  # COPIED | GENERATED

    def to_json_dict(self) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "hypothesis": self.hypothesis,
            "candidates": [{"doc_id": d, "score": s} for d, s in self.candidates],
            "verdict": self.verdict,
        }


def provenance_report(
    index: TfIdfIndex,
    hallucinations,
    k: int = DEFAULT_TOP_K,
    copy_threshold: float = DEFAULT_COPY_THRESHOLD,
) -> list[ProvenanceEntry]:
    """Per hallucinated record: the k closest training transcripts and a verdict.

    Accepts any records carrying utterance_id and hypothesis (EvalRecords in
    practice); records without a hypothesis are skipped.
    """
    entries: list[ProvenanceEntry] = []
    for record in hallucinations:
        hypothesis = record.hypothesis
        if hypothesis is None:
            continue
        candidates = tuple(query_top_k(index, hypothesis, k))
        top_score = candidates[0][1] if candidates else 0.0
        verdict = "COPIED" if top_score >= copy_threshold else "GENERATED"
        entries.append(
            ProvenanceEntry(
                utterance_id=record.utterance_id,
                hypothesis=hypothesis,
                candidates=candidates,
                verdict=verdict,
            )
        )
    return entries
