"""Seeded random-noise perturbation of waveforms.

Noise is uniform on [-amplitude, +amplitude], so the amplitude parameter is
an exact bound rather than a standard deviation. BEGIN placement touches
only the first round(duration * rate) samples; WHOLE covers the utterance.
ADD superimposes and clips to [-1, 1]; REPLACE overwrites.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .audio import Waveform
from .errors import EmptyWaveformError, InvalidConfigError


class Placement(str, Enum):
    BEGIN = "begin"
    WHOLE = "whole"


class MixMode(str, Enum):
    ADD = "add"
    REPLACE = "replace"


@dataclass(frozen=True)
class NoiseSpec:
    placement: Placement = Placement.BEGIN
    amplitude: float = 0.5
    duration_s: float | None = 1.0
    mode: MixMode = MixMode.ADD
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.amplitude <= 1.0:
            raise InvalidConfigError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        if self.placement is Placement.BEGIN:
            if self.duration_s is None or self.duration_s <= 0:
                raise InvalidConfigError("BEGIN placement requires duration_s > 0")


def derive_seed(base_seed: int, utterance_id: str) -> int:
    """Per-utterance seed: base XOR a stable 64-bit hash of the id.

    Stable across processes (unlike hash()), so corpus-level runs remain
    order-independent and reproducible.
    """
    digest = hashlib.blake2b(utterance_id.encode("utf-8"), digest_size=8).digest()
    return (base_seed ^ struct.unpack("<Q", digest)[0]) & 0xFFFFFFFFFFFFFFFF


def gen_noise(n_samples: int, amplitude: float, seed: int) -> np.ndarray:
    """n_samples i.i.d. uniform draws on [-amplitude, +amplitude]."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if not 0.0 < amplitude <= 1.0:
        raise ValueError(f"amplitude must lie in (0, 1], got {amplitude}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-amplitude, amplitude, n_samples)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _mix(region: np.ndarray, noise: np.ndarray, mode: MixMode) -> np.ndarray:
    if mode is MixMode.ADD:
        return np.clip(region + noise, -1.0, 1.0)
    return noise


def inject_begin(waveform: Waveform, spec: NoiseSpec) -> Waveform:
    """Perturb the first round(duration_s * rate) samples, leave the rest bit-identical."""
    if len(waveform) == 0:
        raise EmptyWaveformError("cannot perturb an empty waveform")
    if spec.placement is not Placement.BEGIN:
        raise InvalidConfigError("inject_begin requires a BEGIN-placement spec")
    assert spec.duration_s is not None
    k = _round_half_up(spec.duration_s * waveform.sample_rate)
    if k < 1:
        raise InvalidConfigError("duration_s * sample_rate must be at least one sample")
    k = min(k, len(waveform))
    noise = gen_noise(k, spec.amplitude, spec.seed)
    out = waveform.samples.copy()
    out[:k] = _mix(out[:k], noise, spec.mode)
    return Waveform(samples=out, sample_rate=waveform.sample_rate)


def inject_whole(waveform: Waveform, spec: NoiseSpec) -> Waveform:
    """Perturb every sample of the utterance."""
    if len(waveform) == 0:
        raise EmptyWaveformError("cannot perturb an empty waveform")
    if spec.placement is not Placement.WHOLE:
        raise InvalidConfigError("inject_whole requires a WHOLE-placement spec")
    noise = gen_noise(len(waveform), spec.amplitude, spec.seed)
    return Waveform(samples=_mix(waveform.samples, noise, spec.mode), sample_rate=waveform.sample_rate)


def apply_noise(waveform: Waveform, spec: NoiseSpec) -> Waveform:
    if spec.placement is Placement.BEGIN:
        return inject_begin(waveform, spec)
    return inject_whole(waveform, spec)


def spec_for_utterance(spec: NoiseSpec, utterance_id: str) -> NoiseSpec:
    """Same perturbation parameters with the per-utterance derived seed."""
    return NoiseSpec(
        placement=spec.placement,
        amplitude=spec.amplitude,
        duration_s=spec.duration_s,
        mode=spec.mode,
        seed=derive_seed(spec.seed, utterance_id),
    )
