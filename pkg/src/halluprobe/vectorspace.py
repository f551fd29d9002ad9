"""Sparse term vectors, TF-IDF weighting, and cosine similarity.

The same vectorizer backs both the semantic-relatedness score between a
hypothesis and its reference and the training-transcript provenance index,
so the one idf convention (``ln((1 + docs) / (1 + df)) + 1``) applies
everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyTrainingTextError, UnfittedVectorizerError


@dataclass(frozen=True)
class SparseVector:
    """Nonnegative term-weight map with a cached Euclidean norm."""

    entries: dict[str, float]
    norm: float

    @classmethod
    def from_entries(cls, entries: dict[str, float]) -> "SparseVector":
        kept = {tok: w for tok, w in entries.items() if w != 0.0}
        norm = math.sqrt(sum(w * w for w in kept.values()))
        return cls(entries=kept, norm=norm)

    def dot(self, other: "SparseVector") -> float:
        small, large = (self.entries, other.entries)
        if len(small) > len(large):
            small, large = large, small
        return sum(w * large[tok] for tok, w in small.items() if tok in large)


def cosine_similarity(o: SparseVector, r: SparseVector) -> float:
    """Cosine of two nonnegative vectors; 0 by convention if either is empty."""
    if o.norm == 0.0 or r.norm == 0.0:
        return 0.0
    return o.dot(r) / (o.norm * r.norm)


class Vectorizer:
    """Term-count or TF-IDF sentence vectorizer.

    In ``tfidf`` mode the vectorizer must be fitted first; tokens never seen
    during fitting are dropped. In ``count`` mode no fitting is needed and
    every token is kept with its raw count.
    """

    def __init__(self, mode: str = "tfidf") -> None:
        if mode not in ("tfidf", "count"):
            raise ValueError(f"unknown vectorizer mode {mode!r}")
        self.mode = mode
        self._idf: dict[str, float] | None = None
        self._n_docs = 0

    @property
    def fitted(self) -> bool:
        return self._idf is not None

    @property
    def document_count(self) -> int:
        return self._n_docs

    def idf(self, token: str) -> float | None:
        if self._idf is None:
            return None
        return self._idf.get(token)

    def fit(self, documents: Iterable[Sequence[str]]) -> "Vectorizer":
        """Build the idf table: idf = ln((1 + docs) / (1 + df)) + 1."""
        df: dict[str, int] = {}
        n_docs = 0
        for doc in documents:
            n_docs += 1
            for tok in set(doc):
                df[tok] = df.get(tok, 0) + 1
        if n_docs == 0:
            raise EmptyTrainingTextError("cannot fit a vectorizer on an empty collection")
        self._n_docs = n_docs
        self._idf = {tok: math.log((1 + n_docs) / (1 + d)) + 1.0 for tok, d in df.items()}
        return self

    def vectorize(self, tokens: Sequence[str]) -> SparseVector:
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        if self.mode == "count":
            return SparseVector.from_entries({tok: float(c) for tok, c in counts.items()})
        if self._idf is None:
            raise UnfittedVectorizerError("TF-IDF vectorizer used before fit()")
        return SparseVector.from_entries(
            {tok: c * self._idf[tok] for tok, c in counts.items() if tok in self._idf}
        )
