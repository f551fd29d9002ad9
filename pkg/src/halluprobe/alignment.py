"""Minimal-edit alignment and word error rate.

Unit costs for substitution, insertion, and deletion. Ties during backtrace
resolve in the fixed order MATCH > SUB > DEL > INS so the (S, I, D) split of
a minimal alignment is reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import EmptyReferenceError, ZeroReferenceLengthError


class EditOp(str, Enum):
    MATCH = "MATCH"
    SUB = "SUB"
    INS = "INS"
    DEL = "DEL"


@dataclass(frozen=True)
class Alignment:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int
    ops: tuple[EditOp, ...]

    @property
    def matches(self) -> int:
        return self.ref_len - self.substitutions - self.deletions

    @property
    def hyp_len(self) -> int:
        return self.substitutions + self.insertions + self.matches

    @property
    def distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimal-edit alignment of a hypothesis against a non-empty reference."""
    if len(ref) == 0:
        raise EmptyReferenceError("reference token sequence is empty")
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int32)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        ref_tok = ref[i - 1]
        for j in range(1, m + 1):
            sub_cost = 0 if ref_tok == hyp[j - 1] else 1
            row[j] = min(prev[j - 1] + sub_cost, prev[j] + 1, row[j - 1] + 1)

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        cur = dist[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1, j - 1] == cur:
            ops.append(EditOp.MATCH)
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1, j - 1] + 1 == cur:
            ops.append(EditOp.SUB)
            i, j = i - 1, j - 1
        elif i > 0 and dist[i - 1, j] + 1 == cur:
            ops.append(EditOp.DEL)
            i = i - 1
        else:
            ops.append(EditOp.INS)
            j = j - 1
    ops.reverse()

    s = sum(1 for op in ops if op is EditOp.SUB)
    ins = sum(1 for op in ops if op is EditOp.INS)
    dele = sum(1 for op in ops if op is EditOp.DEL)
    return Alignment(substitutions=s, insertions=ins, deletions=dele, ref_len=n, ops=tuple(ops))


def wer(alignment: Alignment) -> float:
    """Word error rate percentage, 100 * (S + I + D) / N. May exceed 100."""
    if alignment.ref_len <= 0:
        raise ZeroReferenceLengthError("cannot compute WER with an empty reference")
    return 100.0 * alignment.distance / alignment.ref_len


def word_error_rate(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """Convenience wrapper: align then score."""
    return wer(align(ref, hyp))
