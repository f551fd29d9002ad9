/**
 * Minimal RIFF/WAVE codec: 16-bit PCM and 32-bit float, mono reads with
 * channel averaging, plus base64 float32 payloads for the wire protocol.
 */

import * as fs from 'node:fs';

export interface Audio {
  samples: Float64Array;
  sampleRate: number;
}

export function decodePcmF32Base64(payload: string, sampleRate: number): Audio {
  const raw = Buffer.from(payload, 'base64');
  if (raw.length === 0 || raw.length % 4 !== 0) {
    throw new Error('undecodable pcm payload: not a float32 byte stream');
  }
  const samples = new Float64Array(raw.length / 4);
  for (let i = 0; i < samples.length; i += 1) {
    samples[i] = raw.readFloatLE(i * 4);
  }
  return { samples, sampleRate };
}

export function encodePcmF32Base64(audio: Audio): string {
  const raw = Buffer.alloc(audio.samples.length * 4);
  for (let i = 0; i < audio.samples.length; i += 1) {
    raw.writeFloatLE(audio.samples[i]!, i * 4);
  }
  return raw.toString('base64');
}

export function readWav(path: string): Audio {
  const data = fs.readFileSync(path);
  if (data.length < 12 || data.toString('ascii', 0, 4) !== 'RIFF' || data.toString('ascii', 8, 12) !== 'WAVE') {
    throw new Error(`not a RIFF/WAVE file: ${path}`);
  }
  let offset = 12;
  let format: { audioFormat: number; channels: number; sampleRate: number; bits: number } | null = null;
  let payload: Buffer | null = null;
  while (offset + 8 <= data.length) {
    const chunkId = data.toString('ascii', offset, offset + 4);
    const chunkSize = data.readUInt32LE(offset + 4);
    const bodyStart = offset + 8;
    if (chunkId === 'fmt ') {
      if (bodyStart + 16 > data.length) {
        throw new Error(`truncated fmt chunk: ${path}`);
      }
      format = {
        audioFormat: data.readUInt16LE(bodyStart),
        channels: data.readUInt16LE(bodyStart + 2),
        sampleRate: data.readUInt32LE(bodyStart + 4),
        bits: data.readUInt16LE(bodyStart + 14),
      };
    } else if (chunkId === 'data') {
      payload = data.subarray(bodyStart, bodyStart + chunkSize);
    }
    offset = bodyStart + chunkSize + (chunkSize % 2);
  }
  if (!format || !payload) {
    throw new Error(`missing fmt or data chunk: ${path}`);
  }
  const { audioFormat, channels, sampleRate, bits } = format;
  let interleaved: Float64Array;
  if (audioFormat === 1 && bits === 16) {
    const frames = Math.floor(payload.length / 2);
    interleaved = new Float64Array(frames);
    for (let i = 0; i < frames; i += 1) {
      interleaved[i] = payload.readInt16LE(i * 2) / 32768;
    }
  } else if (audioFormat === 3 && bits === 32) {
    const frames = Math.floor(payload.length / 4);
    interleaved = new Float64Array(frames);
    for (let i = 0; i < frames; i += 1) {
      interleaved[i] = payload.readFloatLE(i * 4);
    }
  } else {
    throw new Error(`unsupported WAV encoding (format=${audioFormat}, bits=${bits}): ${path}`);
  }
  if (channels <= 1) {
    return { samples: interleaved, sampleRate };
  }
  const frames = Math.floor(interleaved.length / channels);
  const mono = new Float64Array(frames);
  for (let i = 0; i < frames; i += 1) {
    let sum = 0;
    for (let c = 0; c < channels; c += 1) {
      sum += interleaved[i * channels + c]!;
    }
    mono[i] = sum / channels;
  }
  return { samples: mono, sampleRate };
}

export function writeWavPcm16(path: string, audio: Audio): void {
  const payload = Buffer.alloc(audio.samples.length * 2);
  for (let i = 0; i < audio.samples.length; i += 1) {
    const scaled = Math.max(-32768, Math.min(32767, Math.round(audio.samples[i]! * 32768)));
    payload.writeInt16LE(scaled, i * 2);
  }
  const header = Buffer.alloc(44);
  header.write('RIFF', 0, 'ascii');
  header.writeUInt32LE(36 + payload.length, 4);
  header.write('WAVE', 8, 'ascii');
  header.write('fmt ', 12, 'ascii');
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20);
  header.writeUInt16LE(1, 22);
  header.writeUInt32LE(audio.sampleRate, 24);
  header.writeUInt32LE(audio.sampleRate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write('data', 36, 'ascii');
  header.writeUInt32LE(payload.length, 40);
  fs.writeFileSync(path, Buffer.concat([header, payload]));
}
