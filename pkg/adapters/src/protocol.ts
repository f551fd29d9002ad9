/**
 * Newline-delimited JSON protocol server, over stdio or TCP.
 *
 * The server speaks first with `{"hello": <service>, "version": 1}` and then
 * answers every request line with exactly one response carrying the same
 * integer id. Lines that cannot be parsed, or that carry no integer id, are
 * answered with id -1; handler errors become `{"id": n, "error": msg}`. The
 * connection always stays alive after a bad request.
 */

import * as net from 'node:net';
import type { Readable, Writable } from 'node:stream';

export const PROTOCOL_VERSION = 1;

export type Handler = (request: Record<string, unknown>) => Record<string, unknown>;

function handleLine(line: string, handler: Handler): Record<string, unknown> | null {
  const trimmed = line.trim();
  if (!trimmed) {
    return null;
  }
  let message: unknown;
  try {
    message = JSON.parse(trimmed);
  } catch {
    message = undefined;
  }
  if (
    message === undefined ||
    message === null ||
    typeof message !== 'object' ||
    Array.isArray(message) ||
    !Number.isInteger((message as Record<string, unknown>).id)
  ) {
    return { id: -1, error: 'malformed request: expected a JSON object with an integer id' };
  }
  const request = message as Record<string, unknown>;
  const id = request.id as number;
  try {
    return { id, ...handler(request) };
  } catch (err) {
    return { id, error: err instanceof Error ? err.message : String(err) };
  }
}

/** Serve one connection: handshake, then request/response until EOF. */
export function serveStream(handler: Handler, hello: string, input: Readable, output: Writable): Promise<void> {
  output.write(JSON.stringify({ hello, version: PROTOCOL_VERSION }) + '\n');
  let buffer = '';
  return new Promise((resolve) => {
    input.on('data', (chunk: Buffer | string) => {
      buffer += chunk.toString();
      let newline = buffer.indexOf('\n');
      while (newline >= 0) {
        const line = buffer.slice(0, newline);
        buffer = buffer.slice(newline + 1);
        const response = handleLine(line, handler);
        if (response !== null) {
          output.write(JSON.stringify(response) + '\n');
        }
        newline = buffer.indexOf('\n');
      }
    });
    input.on('end', () => resolve());
    input.on('error', () => resolve());
  });
}

/** Accept TCP connections forever, each served independently. */
export function serveTcp(handler: Handler, hello: string, port: number, host = '127.0.0.1'): net.Server {
  const server = net.createServer((socket) => {
    socket.on('error', () => socket.destroy());
    void serveStream(handler, hello, socket, socket);
  });
  server.listen(port, host, () => {
    process.stderr.write(`listening on ${host}:${(server.address() as net.AddressInfo).port}\n`);
  });
  return server;
}

export interface AdapterConfig {
  modelPath: string;
  device: string;
  batchSize: number;
  tcpPort: number | null;
}

/** Shared CLI parsing: --model <path> [--tcp <port>] [--device x] [--batch-size n]. */
export function parseAdapterArgs(argv: string[]): AdapterConfig {
  const config: AdapterConfig = { modelPath: '', device: 'cpu', batchSize: 1, tcpPort: null };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = () => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`missing value for ${flag}`);
      }
      return argv[i]!;
    };
    switch (flag) {
      case '--model':
        config.modelPath = value();
        break;
      case '--device':
        config.device = value();
        break;
      case '--batch-size':
        config.batchSize = Number.parseInt(value(), 10);
        break;
      case '--tcp':
        config.tcpPort = Number.parseInt(value(), 10);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!config.modelPath) {
    throw new Error('--model is required');
  }
  return config;
}

/** Run an adapter: load the model first, hand-shake only once it is ready. */
export async function runAdapter(hello: string, handler: Handler, config: AdapterConfig): Promise<void> {
  if (config.tcpPort !== null) {
    serveTcp(handler, hello, config.tcpPort);
    return new Promise(() => {});
  }
  await serveStream(handler, hello, process.stdin, process.stdout);
}
