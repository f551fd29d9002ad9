"""Label-mismatch corruption: build noisy training sets from a clean corpus.

Four recipes pair audio from one utterance with the transcript of another:

  UU  n unique sources, each with a unique unrelated target
  RR  a small set of mismatched pairs, repeated to reach the volume
  RU  a small set of repeating sources, paired with n unique targets
  UR  n unique sources, all paired with targets from a small repeated set

"Unrelated" means the assigned target text is never the source's own
reference. Injected utterances are appended to the original corpus under
fresh ids so the clean part stays addressable, and a manifest records the
ground-truth pairings for later provenance checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import Corpus, Utterance
from .errors import CorpusTooSmallError, InvalidVolumeError


class SchemeKind(str, Enum):
    UU = "UU"
    RR = "RR"
    RU = "RU"
    UR = "UR"


@dataclass(frozen=True)
class CorruptionScheme:
    kind: SchemeKind
    # 0 < volume < 1 is a corpus fraction; an integer >= 1 is an absolute count
    volume: float
    rr_pair_count: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rr_pair_count < 1:
            raise InvalidVolumeError("rr_pair_count must be >= 1")
        if self.volume <= 0:
            raise InvalidVolumeError(f"volume must be positive, got {self.volume}")
        if self.volume >= 1 and self.volume != int(self.volume):
            raise InvalidVolumeError(f"absolute volume must be an integer, got {self.volume}")

    def resolved_count(self, corpus_size: int) -> int:
        if 0 < self.volume < 1:
            count = int(round(self.volume * corpus_size))
        else:
            count = int(self.volume)
        if count < 1:
            raise InvalidVolumeError(f"volume {self.volume} resolves to zero injections")
        if count > corpus_size:
            raise InvalidVolumeError(f"volume {count} exceeds corpus size {corpus_size}")
        return count


@dataclass(frozen=True)
class CorruptionPairing:
    new_id: str
    source_id: str
    target_source_id: str
    target_text: str


@dataclass(frozen=True)
class CorruptionManifest:
    scheme: CorruptionScheme
    corrupted_ids: tuple[str, ...]
    pairings: tuple[CorruptionPairing, ...]

    def to_json_dict(self) -> dict:
        return {
            "scheme": {
                "kind": self.scheme.kind.value,
                "volume": self.scheme.volume,
                "rr_pair_count": self.scheme.rr_pair_count,
                "seed": self.scheme.seed,
            },
            "corrupted_ids": list(self.corrupted_ids),
            "pairings": [
                {
                    "new_id": p.new_id,
                    "source_id": p.source_id,
                    "target_source_id": p.target_source_id,
                    "target_text": p.target_text,
                    "origin": "INJECTED",
                }
                for p in self.pairings
            ],
        }


def _distinct_text_indices(corpus: Corpus, rng: np.random.Generator, needed: int) -> list[int]:
    """Random utterance indices whose reference texts are pairwise distinct."""
    picked: list[int] = []
    seen_texts: set[str] = set()
    for idx in rng.permutation(len(corpus)):
        text = corpus.utterances[int(idx)].reference
        if text in seen_texts:
            continue
        seen_texts.add(text)
        picked.append(int(idx))
        if len(picked) == needed:
            return picked
    raise CorpusTooSmallError(
        f"need {needed} distinct target texts, corpus only provides {len(picked)}"
    )


def _repair_self_matches(corpus: Corpus, sources: list[int], targets: list[int]) -> None:
    """Swap target assignments until no pair maps audio onto its own transcript."""
    utts = corpus.utterances
    for i in range(len(sources)):
        if utts[targets[i]].reference != utts[sources[i]].reference:
            continue
        fixed = False
        for j in range(len(sources)):
            if j == i:
                continue
            if (
                utts[targets[j]].reference != utts[sources[i]].reference
                and utts[targets[i]].reference != utts[sources[j]].reference
            ):
                targets[i], targets[j] = targets[j], targets[i]
                fixed = True
                break
        if not fixed:
            raise CorpusTooSmallError("cannot avoid pairing a source with its own transcript")


def _build_pairs(corpus: Corpus, scheme: CorruptionScheme, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    size = len(corpus)
    pair_count = scheme.rr_pair_count
    kind = scheme.kind

    if kind is SchemeKind.UU:
        if size < count:
            raise CorpusTooSmallError(f"UU needs {count} unique sources, corpus has {size}")
        sources = [int(i) for i in rng.choice(size, count, replace=False)]
        targets = _distinct_text_indices(corpus, rng, count)
        _repair_self_matches(corpus, sources, targets)
        return list(zip(sources, targets))

    if kind is SchemeKind.RR:
        if size < pair_count:
            raise CorpusTooSmallError(f"RR needs {pair_count} unique sources, corpus has {size}")
        base_sources = [int(i) for i in rng.choice(size, pair_count, replace=False)]
        base_targets = _distinct_text_indices(corpus, rng, pair_count)
        _repair_self_matches(corpus, base_sources, base_targets)
        base = list(zip(base_sources, base_targets))
        return [base[i % pair_count] for i in range(count)]

    if kind is SchemeKind.RU:
        if size < pair_count:
            raise CorpusTooSmallError(f"RU needs {pair_count} repeat sources, corpus has {size}")
        base_sources = [int(i) for i in rng.choice(size, pair_count, replace=False)]
        sources = [base_sources[i % pair_count] for i in range(count)]
        targets = _distinct_text_indices(corpus, rng, count)
        _repair_self_matches(corpus, sources, targets)
        return list(zip(sources, targets))

    # UR
    if size < count:
        raise CorpusTooSmallError(f"UR needs {count} unique sources, corpus has {size}")
    sources = [int(i) for i in rng.choice(size, count, replace=False)]
    base_targets = _distinct_text_indices(corpus, rng, pair_count)
    targets = [base_targets[i % pair_count] for i in range(count)]
    utts = corpus.utterances
    for i in range(count):
        if utts[targets[i]].reference != utts[sources[i]].reference:
            continue
        fixed = False
        for j in range(count):
            if (
                j != i
                and utts[targets[i]].reference != utts[sources[j]].reference
                and utts[targets[j]].reference != utts[sources[i]].reference
            ):
                sources[i], sources[j] = sources[j], sources[i]
                fixed = True
                break
        if not fixed:
            raise CorpusTooSmallError("cannot avoid pairing a source with its own transcript")
    return list(zip(sources, targets))


def corrupt(corpus: Corpus, scheme: CorruptionScheme) -> tuple[Corpus, CorruptionManifest]:
    """Append `volume` label-mismatched utterances built per the scheme's recipe.

    Deterministic: the same (corpus, scheme) always yields the same manifest.
    """
    count = scheme.resolved_count(len(corpus))
    rng = np.random.Generator(np.random.PCG64(scheme.seed))
    pairs = _build_pairs(corpus, scheme, count, rng)

    injected: list[Utterance] = []
    pairings: list[CorruptionPairing] = []
    for i, (src_idx, tgt_idx) in enumerate(pairs):
        src = corpus.utterances[src_idx]
        tgt = corpus.utterances[tgt_idx]
        new_id = f"{src.id}#noise{i}"
        injected.append(Utterance(id=new_id, audio_path=src.audio_path, reference=tgt.reference))
        pairings.append(
            CorruptionPairing(
                new_id=new_id, source_id=src.id, target_source_id=tgt.id, target_text=tgt.reference
            )
        )

    corrupted = Corpus(
        name=f"{corpus.name}+{scheme.kind.value.lower()}{count}",
        utterances=corpus.utterances + tuple(injected),
    )
    manifest = CorruptionManifest(
        scheme=scheme,
        corrupted_ids=tuple(u.id for u in injected),
        pairings=tuple(pairings),
    )
    return corrupted, manifest
