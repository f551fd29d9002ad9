/** Shared test plumbing: spawn an adapter, speak the protocol, run goldens. */

import { spawn, type ChildProcessByStdio } from 'node:child_process';
import { once } from 'node:events';
import * as path from 'node:path';
import type { Readable, Writable } from 'node:stream';
import { fileURLToPath } from 'node:url';

export const ADAPTERS_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..', '..');
export const REPO_ROOT = path.resolve(ADAPTERS_ROOT, '..');
export const GOLDEN_DIR = path.join(REPO_ROOT, 'tests', 'golden');
export const ASSETS = path.join(ADAPTERS_ROOT, 'assets');
export const DIST_SRC = path.join(ADAPTERS_ROOT, 'dist', 'src');

export class ProtocolPeer {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private buffer = '';
  private lines: string[] = [];
  private waiters: Array<(line: string | null) => void> = [];
  private closed = false;

  constructor(command: string, args: string[]) {
    this.proc = spawn(command, args, { stdio: ['pipe', 'pipe', 'inherit'] });
    this.proc.stdout.on('data', (chunk: Buffer) => {
      this.buffer += chunk.toString();
      let newline = this.buffer.indexOf('\n');
      while (newline >= 0) {
        const line = this.buffer.slice(0, newline);
        this.buffer = this.buffer.slice(newline + 1);
        const waiter = this.waiters.shift();
        if (waiter) {
          waiter(line);
        } else {
          this.lines.push(line);
        }
        newline = this.buffer.indexOf('\n');
      }
    });
    this.proc.stdout.on('end', () => {
      this.closed = true;
      for (const waiter of this.waiters.splice(0)) {
        waiter(null);
      }
    });
  }

  sendRaw(line: string): void {
    this.proc.stdin.write(line + '\n');
  }

  send(payload: Record<string, unknown>): void {
    this.sendRaw(JSON.stringify(payload));
  }

  readLine(timeoutMs = 15000): Promise<string | null> {
    const queued = this.lines.shift();
    if (queued !== undefined) {
      return Promise.resolve(queued);
    }
    if (this.closed) {
      return Promise.resolve(null);
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error('timed out waiting for a protocol line')), timeoutMs);
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolve(line);
      });
    });
  }

  async readJson(timeoutMs = 15000): Promise<Record<string, unknown>> {
    const line = await this.readLine(timeoutMs);
    if (line === null) {
      throw new Error('connection closed');
    }
    return JSON.parse(line) as Record<string, unknown>;
  }

  async close(): Promise<void> {
    this.proc.stdin.end();
    if (this.proc.exitCode === null) {
      await Promise.race([once(this.proc, 'exit'), new Promise((r) => setTimeout(r, 2000))]);
    }
    if (this.proc.exitCode === null) {
      this.proc.kill('SIGKILL');
    }
  }
}

export function spawnAsrAdapter(modelPath: string): ProtocolPeer {
  return new ProtocolPeer('node', [path.join(DIST_SRC, 'asr.js'), '--model', modelPath]);
}

export function spawnLmAdapter(modelPath: string): ProtocolPeer {
  return new ProtocolPeer('node', [path.join(DIST_SRC, 'lm.js'), '--model', modelPath]);
}

export async function expectHandshake(peer: ProtocolPeer, hello: string): Promise<void> {
  const handshake = await peer.readJson();
  if (handshake.hello !== hello || handshake.version !== 1) {
    throw new Error(`bad handshake: ${JSON.stringify(handshake)}`);
  }
}

interface GoldenStep {
  send_raw?: string;
  send?: Record<string, unknown>;
  expect?: { id: number; has: string; repeat_of?: number };
}

export interface GoldenFile {
  name: string;
  applies_to: string[];
  steps: GoldenStep[];
}

export interface GoldenFixtures {
  valid_audio: { sample_rate: number; pcm_f32_base64: string };
  valid_text: string;
}

/** Mirror of the Python golden runner: id-matched, order-tolerant. */
export async function runGolden(golden: GoldenFile, peer: ProtocolPeer, fixtures: GoldenFixtures): Promise<void> {
  const handshake = await peer.readJson();
  if (typeof handshake.hello !== 'string' || handshake.version !== 1) {
    throw new Error(`bad handshake: ${JSON.stringify(handshake)}`);
  }
  const arrived = new Map<number, Record<string, unknown>[]>();
  const byRequest = new Map<number, Record<string, unknown>>();

  const drainUntil = async (id: number): Promise<Record<string, unknown>> => {
    for (;;) {
      const bucket = arrived.get(id);
      if (bucket && bucket.length > 0) {
        const response = bucket.shift()!;
        if (id >= 0) {
          byRequest.set(id, response);
        }
        return response;
      }
      const message = await peer.readJson();
      if (!Number.isInteger(message.id)) {
        throw new Error(`unmatchable response: ${JSON.stringify(message)}`);
      }
      const mid = message.id as number;
      if (!arrived.has(mid)) {
        arrived.set(mid, []);
      }
      arrived.get(mid)!.push(message);
    }
  };

  for (const step of golden.steps) {
    if (step.send_raw !== undefined) {
      peer.sendRaw(step.send_raw);
    } else if (step.send !== undefined) {
      const payload: Record<string, unknown> = { ...step.send };
      if (payload.$valid_audio) {
        delete payload.$valid_audio;
        Object.assign(payload, fixtures.valid_audio);
      }
      if (payload.$valid_text) {
        delete payload.$valid_text;
        payload.text = fixtures.valid_text;
      }
      peer.send(payload);
    } else if (step.expect !== undefined) {
      const response = await drainUntil(step.expect.id);
      const field = step.expect.has;
      if (!(field in response)) {
        throw new Error(`expected ${field} in ${JSON.stringify(response)}`);
      }
      const value = response[field];
      if (field === 'error' && (typeof value !== 'string' || value.length === 0)) {
        throw new Error(`error must be a nonempty string: ${JSON.stringify(response)}`);
      }
      if (field === 'transcript' && typeof value !== 'string') {
        throw new Error(`transcript must be a string: ${JSON.stringify(response)}`);
      }
      if (field === 'ppl' && (typeof value !== 'number' || !(value > 0))) {
        throw new Error(`ppl must be positive: ${JSON.stringify(response)}`);
      }
      if (step.expect.repeat_of !== undefined) {
        const earlier = byRequest.get(step.expect.repeat_of);
        if (!earlier || earlier[field] !== value) {
          throw new Error(`expected repeat of ${JSON.stringify(earlier)}, got ${JSON.stringify(response)}`);
        }
      }
    } else {
      throw new Error(`unknown golden step ${JSON.stringify(step)}`);
    }
  }
}

/** Deterministic in-place shuffle that always lands on a different order. */
export function seededShuffle(tokens: string[], seed: number): string[] {
  const out = [...tokens];
  let state = seed >>> 0;
  const next = () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 0x100000000;
  };
  for (let attempt = 0; attempt < 50; attempt += 1) {
    for (let i = out.length - 1; i > 0; i -= 1) {
      const j = Math.floor(next() * (i + 1));
      [out[i], out[j]] = [out[j]!, out[i]!];
    }
    if (out.join(' ') !== tokens.join(' ')) {
      return out;
    }
  }
  return out.reverse();
}
