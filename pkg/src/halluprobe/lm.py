"""Sentence fluency scoring: perplexity over a pluggable language model.

Perplexity is the inverse sentence probability raised to 1/n, where n counts
the real tokens of the scored sentence. The built-in model is an add-k
smoothed n-gram LM: small enough to train on any transcript collection in
memory, while still giving finite, word-order-sensitive scores. External
neural models attach through the JSON-lines provider protocol instead.

Conventions of the built-in model: contexts at the sentence start are padded
with a begin marker; no end-of-sentence event is scored, so the event space
per context is exactly the vocabulary (UNK included) and a uniform unigram
model over V types has perplexity V for every sentence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .errors import EmptySentenceError, EmptyTrainingTextError, InvalidSmoothingError, ProviderFailureError

UNK = "<unk>"
_BOS = "<s>"


class PerplexityProvider(Protocol):
    def sentence_perplexity(self, tokens: Sequence[str]) -> float: ...


@dataclass(frozen=True)
class SmoothingConfig:
    k: float = 0.1
    # training tokens rarer than this collapse into UNK
    min_count: int = 2

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise InvalidSmoothingError(f"add-k smoothing requires k > 0, got {self.k}")
        if self.min_count < 1:
            raise InvalidSmoothingError(f"min_count must be >= 1, got {self.min_count}")


class NgramLanguageModel:
    """Add-k smoothed n-gram model over vocabulary + UNK.

    P(token | ctx) = (count(ctx, token) + k) / (count(ctx) + k * |V|), which
    sums to 1 over the vocabulary for every context, including unseen ones.
    """

    def __init__(
        self,
        order: int,
        vocab: frozenset[str],
        context_counts: dict[tuple[str, ...], int],
        ngram_counts: dict[tuple[str, ...], int],
        k: float,
    ) -> None:
        if order < 1:
            raise ValueError("n-gram order must be >= 1")
        self.order = order
        self.vocab = vocab
        self._context_counts = context_counts
        self._ngram_counts = ngram_counts
        self.k = k

    @classmethod
    def train(
        cls,
        texts: Iterable[Sequence[str]],
        order: int = 2,
        smoothing: SmoothingConfig | None = None,
    ) -> "NgramLanguageModel":
        smoothing = smoothing or SmoothingConfig()
        if order < 1:
            raise ValueError("n-gram order must be >= 1")
        sentences = [list(t) for t in texts]
        token_freq: dict[str, int] = {}
        for sent in sentences:
            for tok in sent:
                token_freq[tok] = token_freq.get(tok, 0) + 1
        if not token_freq:
            raise EmptyTrainingTextError("no tokens in LM training texts")

        vocab = {tok for tok, c in token_freq.items() if c >= smoothing.min_count}
        vocab.add(UNK)

        context_counts: dict[tuple[str, ...], int] = {}
        ngram_counts: dict[tuple[str, ...], int] = {}
        pad = [_BOS] * (order - 1)
        for sent in sentences:
            mapped = pad + [tok if tok in vocab else UNK for tok in sent]
            for i in range(order - 1, len(mapped)):
                ctx = tuple(mapped[i - order + 1 : i])
                gram = tuple(mapped[i - order + 1 : i + 1])
                context_counts[ctx] = context_counts.get(ctx, 0) + 1
                ngram_counts[gram] = ngram_counts.get(gram, 0) + 1
        return cls(order, frozenset(vocab), context_counts, ngram_counts, smoothing.k)

    @classmethod
    def uniform(cls, vocab_size: int) -> "NgramLanguageModel":
        """Unigram model assigning exactly 1/V to every token, UNK included."""
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        vocab = frozenset({UNK} | {f"w{i}" for i in range(vocab_size - 1)})
        return cls(order=1, vocab=vocab, context_counts={}, ngram_counts={}, k=1.0)

    def log_prob(self, token: str, context: Sequence[str]) -> float:
        tok = token if token in self.vocab else UNK
        ctx = tuple(t if t in self.vocab or t == _BOS else UNK for t in context)
        num = self._ngram_counts.get(ctx + (tok,), 0) + self.k
        den = self._context_counts.get(ctx, 0) + self.k * len(self.vocab)
        return math.log(num) - math.log(den)

    def sentence_log_prob(self, tokens: Sequence[str]) -> float:
        padded = [_BOS] * (self.order - 1) + list(tokens)
        total = 0.0
        for i in range(self.order - 1, len(padded)):
            total += self.log_prob(padded[i], padded[i - self.order + 1 : i])
        return total

    def sentence_perplexity(self, tokens: Sequence[str]) -> float:
        if not tokens:
            raise EmptySentenceError("cannot score an empty sentence")
        return math.exp(-self.sentence_log_prob(tokens) / len(tokens))

    def context_distribution(self, context: Sequence[str]) -> dict[str, float]:
        """Explicit next-token distribution, mainly for invariant checks."""
        return {tok: math.exp(self.log_prob(tok, context)) for tok in self.vocab}


def train_ngram_lm(
    texts: Iterable[Sequence[str]],
    order: int = 2,
    smoothing: SmoothingConfig | None = None,
) -> NgramLanguageModel:
    return NgramLanguageModel.train(texts, order=order, smoothing=smoothing)


def perplexity(tokens: Sequence[str], provider: PerplexityProvider) -> float:
    """Score a non-empty token sequence with any perplexity provider."""
    if not tokens:
        raise EmptySentenceError("cannot score an empty sentence")
    value = provider.sentence_perplexity(tokens)
    if not (value > 0 and math.isfinite(value)):
        raise ProviderFailureError(f"provider returned non-positive or non-finite perplexity {value!r}")
    return value


class ExternalLmProvider:
    """Perplexity over the JSON-lines provider protocol.

    Requests are ``{"id": n, "op": "ppl", "text": <sentence>}``; any
    transport loss, protocol breakage, or error response surfaces as
    ProviderFailureError so scoring loops can decide whether to abort.
    """

    def __init__(self, transport_spec: str, timeout: float = 60.0) -> None:
        from .errors import BackendUnreachableError, ProtocolViolationError
        from .wire import JsonLinesClient, open_transport

        self._wire_errors = (BackendUnreachableError, ProtocolViolationError)
        try:
            self._client = JsonLinesClient(open_transport(transport_spec), timeout=timeout)
        except self._wire_errors as exc:
            raise ProviderFailureError(f"cannot attach perplexity provider {transport_spec!r}: {exc}") from exc

    def sentence_perplexity(self, tokens: Sequence[str]) -> float:
        try:
            response = self._client.call({"op": "ppl", "text": " ".join(tokens)})
        except self._wire_errors as exc:
            raise ProviderFailureError(str(exc)) from exc
        if "error" in response:
            raise ProviderFailureError(str(response["error"]))
        value = response.get("ppl")
        if not isinstance(value, (int, float)):
            raise ProviderFailureError(f"response carries neither ppl nor error: {response!r}")
        return float(value)

    def close(self) -> None:
        self._client.close()
