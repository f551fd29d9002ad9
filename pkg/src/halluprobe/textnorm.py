"""Transcript normalization shared by ingestion, scoring, and indexing.

All text entering the toolkit is folded into one token space: lowercase,
apostrophes and alphanumerics only, single-spaced. Keeping exactly one
normalizer guarantees WER, cosine, and index tokenizations never disagree.
"""

from __future__ import annotations

import re

_STRIP_RE = re.compile(r"[^a-z0-9' ]+")
_SPACE_RE = re.compile(r" {2,}")


def normalize_text(text: str) -> str:
    """Lowercase, drop characters outside [a-z0-9' ], collapse whitespace.

    Idempotent: ``normalize_text(normalize_text(t)) == normalize_text(t)``.
    """
    lowered = text.lower().replace("\t", " ").replace("\n", " ").replace("\r", " ")
    stripped = _STRIP_RE.sub(" ", lowered)
    return _SPACE_RE.sub(" ", stripped).strip()


def tokenize(text: str) -> list[str]:
    """Split normalized text into tokens (normalizes first)."""
    return normalize_text(text).split()
