"""Overlap-based reference metrics: sentence BLEU, chrF2, unigram ROUGE.

These exist for cross-metric comparisons against WER; none of them feeds the
error taxonomy. BLEU is the 4-gram sentence variant with add-1 smoothing on
hit and total counts for orders >= 2. chrF2 averages character n-gram
precision/recall over orders 1-6 (whitespace removed) with beta = 2. ROUGE-1
is plain unigram multiset-overlap F1.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .textnorm import tokenize

_BLEU_ORDER = 4
_CHRF_ORDER = 6
_CHRF_BETA = 2.0


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(ref: str, hyp: str) -> float:
    """Smoothed sentence BLEU in [0, 100]; empty hypothesis scores 0."""
    ref_toks = tokenize(ref)
    hyp_toks = tokenize(hyp)
    return bleu_from_tokens(ref_toks, hyp_toks)


def bleu_from_tokens(ref_toks: Sequence[str], hyp_toks: Sequence[str]) -> float:
    if not hyp_toks:
        return 0.0
    log_precision_sum = 0.0
    for n in range(1, _BLEU_ORDER + 1):
        hyp_ngrams = _ngram_counts(hyp_toks, n)
        ref_ngrams = _ngram_counts(ref_toks, n)
        hits = sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
        total = sum(hyp_ngrams.values())
        if n >= 2:
            hits += 1
            total += 1
        if hits == 0 or total == 0:
            return 0.0
        log_precision_sum += math.log(hits / total)
    bp = 1.0
    if len(hyp_toks) < len(ref_toks):
        bp = math.exp(1.0 - len(ref_toks) / len(hyp_toks))
    return 100.0 * bp * math.exp(log_precision_sum / _BLEU_ORDER)


def corpus_bleu(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Standard corpus BLEU aggregate (no smoothing) in [0, 100]."""
    if len(refs) != len(hyps):
        raise ValueError("refs and hyps must be parallel")
    hits = [0] * _BLEU_ORDER
    totals = [0] * _BLEU_ORDER
    ref_len = 0
    hyp_len = 0
    for ref, hyp in zip(refs, hyps):
        ref_toks = tokenize(ref)
        hyp_toks = tokenize(hyp)
        ref_len += len(ref_toks)
        hyp_len += len(hyp_toks)
        for n in range(1, _BLEU_ORDER + 1):
            hyp_ngrams = _ngram_counts(hyp_toks, n)
            ref_ngrams = _ngram_counts(ref_toks, n)
            hits[n - 1] += sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
            totals[n - 1] += sum(hyp_ngrams.values())
    if hyp_len == 0 or any(t == 0 for t in totals) or any(h == 0 for h in hits):
        return 0.0
    log_precision_sum = sum(math.log(h / t) for h, t in zip(hits, totals))
    bp = math.exp(1.0 - ref_len / hyp_len) if hyp_len < ref_len else 1.0
    return 100.0 * bp * math.exp(log_precision_sum / _BLEU_ORDER)


def chrf2(ref: str, hyp: str) -> float:
    """Character n-gram F-score with beta = 2, orders 1-6, in [0, 100]."""
    ref_chars = "".join(tokenize(ref))
    hyp_chars = "".join(tokenize(hyp))
    precision_sum = 0.0
    recall_sum = 0.0
    effective_orders = 0
    for n in range(1, _CHRF_ORDER + 1):
        hyp_ngrams = _ngram_counts(hyp_chars, n)
        ref_ngrams = _ngram_counts(ref_chars, n)
        hyp_total = sum(hyp_ngrams.values())
        ref_total = sum(ref_ngrams.values())
        if hyp_total == 0 or ref_total == 0:
            continue
        overlap = sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
        precision_sum += overlap / hyp_total
        recall_sum += overlap / ref_total
        effective_orders += 1
    if effective_orders == 0:
        return 0.0
    precision = precision_sum / effective_orders
    recall = recall_sum / effective_orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = _CHRF_BETA**2
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def corpus_chrf2(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Corpus chrF2: n-gram statistics pooled over the corpus, then averaged."""
    if len(refs) != len(hyps):
        raise ValueError("refs and hyps must be parallel")
    hyp_totals = [0] * _CHRF_ORDER
    ref_totals = [0] * _CHRF_ORDER
    overlaps = [0] * _CHRF_ORDER
    for ref, hyp in zip(refs, hyps):
        ref_chars = "".join(tokenize(ref))
        hyp_chars = "".join(tokenize(hyp))
        for n in range(1, _CHRF_ORDER + 1):
            hyp_ngrams = _ngram_counts(hyp_chars, n)
            ref_ngrams = _ngram_counts(ref_chars, n)
            hyp_totals[n - 1] += sum(hyp_ngrams.values())
            ref_totals[n - 1] += sum(ref_ngrams.values())
            overlaps[n - 1] += sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
    precision_sum = 0.0
    recall_sum = 0.0
    effective_orders = 0
    for n in range(_CHRF_ORDER):
        if hyp_totals[n] == 0 or ref_totals[n] == 0:
            continue
        precision_sum += overlaps[n] / hyp_totals[n]
        recall_sum += overlaps[n] / ref_totals[n]
        effective_orders += 1
    if effective_orders == 0:
        return 0.0
    precision = precision_sum / effective_orders
    recall = recall_sum / effective_orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = _CHRF_BETA**2
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def rouge1(ref: str, hyp: str) -> float:
    """Unigram multiset-overlap F1 in [0, 1]."""
    ref_counts = Counter(tokenize(ref))
    hyp_counts = Counter(tokenize(hyp))
    if not ref_counts or not hyp_counts:
        return 0.0
    overlap = sum(min(c, ref_counts[t]) for t, c in hyp_counts.items())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(hyp_counts.values())
    recall = overlap / sum(ref_counts.values())
    return 2 * precision * recall / (precision + recall)
