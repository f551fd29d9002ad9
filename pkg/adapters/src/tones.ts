/**
 * Tone-lexicon speech codec: each word in the lexicon is a pure tone at its
 * own frequency, words are separated by silence. Decoding segments the
 * signal on energy gaps and matches each segment's dominant frequency
 * (Goertzel filter bank over the lexicon) to the nearest word. It is a
 * deliberately small acoustic model: deterministic, offline, and honest
 * about degrading when the signal is corrupted.
 */

import * as fs from 'node:fs';
import type { Audio } from './wav.js';

export interface Lexicon {
  sampleRate: number;
  toneDurationS: number;
  gapDurationS: number;
  amplitude: number;
  /** word -> tone frequency in Hz */
  words: Record<string, number>;
}

export function loadLexicon(path: string): Lexicon {
  const raw = JSON.parse(fs.readFileSync(path, 'utf-8')) as Record<string, unknown>;
  const lexicon: Lexicon = {
    sampleRate: raw.sample_rate as number,
    toneDurationS: raw.tone_duration_s as number,
    gapDurationS: raw.gap_duration_s as number,
    amplitude: raw.amplitude as number,
    words: raw.words as Record<string, number>,
  };
  if (
    !Number.isInteger(lexicon.sampleRate) ||
    lexicon.sampleRate <= 0 ||
    !(lexicon.toneDurationS > 0) ||
    !(lexicon.gapDurationS > 0) ||
    !(lexicon.amplitude > 0) ||
    Object.keys(lexicon.words).length === 0
  ) {
    throw new Error(`invalid lexicon file: ${path}`);
  }
  return lexicon;
}

/** Synthesize an utterance: per-word tone bursts with silence gaps. */
export function synthesize(lexicon: Lexicon, words: string[]): Audio {
  const toneLen = Math.round(lexicon.toneDurationS * lexicon.sampleRate);
  const gapLen = Math.round(lexicon.gapDurationS * lexicon.sampleRate);
  const total = gapLen + words.length * (toneLen + gapLen);
  const samples = new Float64Array(total);
  let pos = gapLen;
  for (const word of words) {
    const freq = lexicon.words[word];
    if (freq === undefined) {
      throw new Error(`word not in lexicon: ${word}`);
    }
    for (let i = 0; i < toneLen; i += 1) {
      samples[pos + i] = lexicon.amplitude * Math.sin((2 * Math.PI * freq * i) / lexicon.sampleRate);
    }
    pos += toneLen + gapLen;
  }
  return { samples, sampleRate: lexicon.sampleRate };
}

function goertzelPower(samples: Float64Array, start: number, end: number, freq: number, rate: number): number {
  const omega = (2 * Math.PI * freq) / rate;
  const coeff = 2 * Math.cos(omega);
  let sPrev = 0;
  let sPrev2 = 0;
  for (let i = start; i < end; i += 1) {
    const s = samples[i]! + coeff * sPrev - sPrev2;
    sPrev2 = sPrev;
    sPrev = s;
  }
  return sPrev2 * sPrev2 + sPrev * sPrev - coeff * sPrev * sPrev2;
}

interface Segment {
  start: number;
  end: number;
}

function energySegments(audio: Audio, windowS: number, rmsThreshold: number, minSegmentS: number): Segment[] {
  const window = Math.max(1, Math.round(windowS * audio.sampleRate));
  const active: boolean[] = [];
  for (let start = 0; start < audio.samples.length; start += window) {
    const end = Math.min(audio.samples.length, start + window);
    let sum = 0;
    for (let i = start; i < end; i += 1) {
      sum += audio.samples[i]! * audio.samples[i]!;
    }
    active.push(Math.sqrt(sum / (end - start)) >= rmsThreshold);
  }
  const segments: Segment[] = [];
  let segStart: number | null = null;
  for (let w = 0; w <= active.length; w += 1) {
    const on = w < active.length && active[w]!;
    if (on && segStart === null) {
      segStart = w * window;
    } else if (!on && segStart !== null) {
      const end = Math.min(audio.samples.length, w * window);
      if (end - segStart >= minSegmentS * audio.sampleRate) {
        segments.push({ start: segStart, end });
      }
      segStart = null;
    }
  }
  return segments;
}

/** Decode audio back to words: one word per energy segment, best-matching tone wins. */
export function decode(lexicon: Lexicon, audio: Audio): string[] {
  if (audio.sampleRate !== lexicon.sampleRate) {
    throw new Error(`sample rate ${audio.sampleRate} does not match the model's ${lexicon.sampleRate}`);
  }
  const segments = energySegments(audio, 0.01, lexicon.amplitude * 0.25, lexicon.toneDurationS * 0.5);
  const entries = Object.entries(lexicon.words);
  const decoded: string[] = [];
  for (const segment of segments) {
    let bestWord = '';
    let bestPower = -Infinity;
    for (const [word, freq] of entries) {
      const power = goertzelPower(audio.samples, segment.start, segment.end, freq, audio.sampleRate);
      if (power > bestPower) {
        bestPower = power;
        bestWord = word;
      }
    }
    decoded.push(bestWord);
  }
  return decoded;
}
