import time
from collections import Counter
from pathlib import Path

import pytest

from halluprobe.corpus import Corpus, Utterance
from halluprobe.corruptor import CorruptionScheme, SchemeKind, corrupt
from halluprobe.errors import CorpusTooSmallError, InvalidVolumeError


def synthetic_corpus(n: int) -> Corpus:
    utterances = tuple(
        Utterance(id=f"u{i}", audio_path=Path(f"audio/{i}.wav"), reference=f"sentence number {i} spoken aloud")
        for i in range(n)
    )
    return Corpus(name="synthetic", utterances=utterances)


def injected_pairs(corpus, manifest):
    by_id = {u.id: u for u in corpus}
    return [(by_id[p.new_id].audio_path, p.source_id, p.target_text) for p in manifest.pairings]


class TestVolumes:
    def test_fraction_resolves_by_rounding(self):
        scheme = CorruptionScheme(kind=SchemeKind.UU, volume=0.08, seed=1)
        assert scheme.resolved_count(104014) == 8321

    def test_absolute_count(self):
        scheme = CorruptionScheme(kind=SchemeKind.UU, volume=20000, seed=1)
        assert scheme.resolved_count(104014) == 20000

    def test_invalid_volumes(self):
        with pytest.raises(InvalidVolumeError):
            CorruptionScheme(kind=SchemeKind.UU, volume=0)
        with pytest.raises(InvalidVolumeError):
            CorruptionScheme(kind=SchemeKind.UU, volume=1.5)
        with pytest.raises(InvalidVolumeError):
            CorruptionScheme(kind=SchemeKind.UU, volume=500, seed=1).resolved_count(100)


class TestRecipes:
    def test_uu_uniqueness(self):
        corpus = synthetic_corpus(500)
        corrupted, manifest = corrupt(corpus, CorruptionScheme(kind=SchemeKind.UU, volume=100, seed=3))
        sources = [p.source_id for p in manifest.pairings]
        targets = [p.target_text for p in manifest.pairings]
        assert len(set(sources)) == 100
        assert len(set(targets)) == 100
        assert len(corrupted) == 600

    def test_rr_exactly_ten_pairs_each_repeated(self):
        corpus = synthetic_corpus(500)
        corrupted, manifest = corrupt(corpus, CorruptionScheme(kind=SchemeKind.RR, volume=100, seed=3))
        pairs = Counter((p.source_id, p.target_text) for p in manifest.pairings)
        assert len(pairs) == 10
        assert set(pairs.values()) == {10}

    def test_ru_repeating_sources_unique_targets(self):
        corpus = synthetic_corpus(500)
        _, manifest = corrupt(corpus, CorruptionScheme(kind=SchemeKind.RU, volume=120, seed=3))
        sources = [p.source_id for p in manifest.pairings]
        targets = [p.target_text for p in manifest.pairings]
        assert len(set(sources)) <= 10
        assert len(set(targets)) == 120

    def test_ur_unique_sources_ten_targets(self):
        corpus = synthetic_corpus(500)
        _, manifest = corrupt(corpus, CorruptionScheme(kind=SchemeKind.UR, volume=120, seed=3))
        sources = [p.source_id for p in manifest.pairings]
        targets = [p.target_text for p in manifest.pairings]
        assert len(set(sources)) == 120
        assert len(set(targets)) == 10

    @pytest.mark.parametrize("kind", list(SchemeKind))
    def test_no_self_pairs_and_size(self, kind):
        corpus = synthetic_corpus(300)
        by_id = {u.id: u for u in corpus}
        corrupted, manifest = corrupt(corpus, CorruptionScheme(kind=kind, volume=80, seed=9))
        assert len(corrupted) == 380
        assert len(manifest.corrupted_ids) == 80
        for pairing in manifest.pairings:
            assert pairing.target_text != by_id[pairing.source_id].reference
        # injected audio comes from the stated source
        for utt_id, source_id in zip(manifest.corrupted_ids, (p.source_id for p in manifest.pairings)):
            assert corrupted.get(utt_id).audio_path == by_id[source_id].audio_path

    @pytest.mark.parametrize("kind", list(SchemeKind))
    def test_deterministic(self, kind):
        corpus = synthetic_corpus(300)
        scheme = CorruptionScheme(kind=kind, volume=50, seed=21)
        _, first = corrupt(corpus, scheme)
        _, second = corrupt(corpus, scheme)
        assert first == second
        _, different = corrupt(corpus, CorruptionScheme(kind=kind, volume=50, seed=22))
        assert first != different

    def test_ids_stay_unique_when_sources_repeat(self):
        corpus = synthetic_corpus(100)
        corrupted, _ = corrupt(corpus, CorruptionScheme(kind=SchemeKind.RU, volume=60, seed=2))
        assert len({u.id for u in corrupted}) == len(corrupted)

    def test_corpus_too_small(self):
        corpus = synthetic_corpus(5)
        with pytest.raises(CorpusTooSmallError):
            corrupt(corpus, CorruptionScheme(kind=SchemeKind.RR, volume=5, seed=1, rr_pair_count=10))

    def test_performance_at_ten_thousand(self):
        corpus = synthetic_corpus(12000)
        start = time.monotonic()
        for kind in SchemeKind:
            _, manifest = corrupt(corpus, CorruptionScheme(kind=kind, volume=10000, seed=4))
            assert len(manifest.corrupted_ids) == 10000
        assert time.monotonic() - start < 10.0
