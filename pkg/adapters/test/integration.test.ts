/**
 * End-to-end runs of the primary toolkit's detect subcommand against each
 * adapter: the ASR adapter serves as the transcription backend over
 * exec:, and the LM adapter as the external perplexity provider.
 */

import assert from 'node:assert/strict';
import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { test } from 'node:test';

import { loadLexicon, synthesize } from '../src/tones.js';
import { writeWavPcm16 } from '../src/wav.js';
import { ASSETS, DIST_SRC } from './helpers.js';

const LEXICON_PATH = path.join(ASSETS, 'lexicon.json');
const CORPUS_PATH = path.join(ASSETS, 'lm_corpus.txt');
const PYTHON = process.env.PYTHON ?? 'python3';

function runPrimary(args: string[]): string {
  return execFileSync(PYTHON, ['-m', 'halluprobe', ...args], { encoding: 'utf-8', timeout: 180_000 });
}

interface DetectionReport {
  schema: string;
  thresholds: Record<string, number>;
  n_evaluated: number;
  n_perturbed: number;
  natural_halluc_rate: number;
  perturbed_halluc_rate: number;
  susceptibility_score: number;
  class_counts: Record<string, Record<string, number>>;
  natural_records: Array<Record<string, unknown>>;
  perturbed_records: Array<Record<string, unknown>>;
}

function assertSchemaValid(report: DetectionReport): void {
  assert.equal(report.schema, 'halluprobe/detection-report/1');
  for (const key of ['t_wer', 't_cos', 't_ppl']) {
    assert.ok(typeof report.thresholds[key] === 'number');
  }
  assert.ok(Number.isInteger(report.n_evaluated) && report.n_evaluated >= 0);
  assert.ok(report.natural_halluc_rate >= 0 && report.natural_halluc_rate <= 1);
  assert.ok(report.perturbed_halluc_rate >= 0 && report.perturbed_halluc_rate <= 1);
  assert.ok(report.susceptibility_score >= -1 && report.susceptibility_score <= 1);
  assert.ok(Array.isArray(report.natural_records));
  assert.ok(Array.isArray(report.perturbed_records));
  for (const record of [...report.natural_records, ...report.perturbed_records]) {
    assert.ok(typeof record.utterance_id === 'string');
    assert.ok(record.phase === 'NATURAL' || record.phase === 'PERTURBED');
  }
}

function mkTemp(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

test('primary detect completes against the ASR adapter', () => {
  const lexicon = loadLexicon(LEXICON_PATH);
  const vocabulary = Object.keys(lexicon.words);
  const dir = mkTemp('asr-integration-');
  fs.mkdirSync(path.join(dir, 'audio'));
  const manifestLines: string[] = [];
  let cursor = 0;
  for (let i = 0; i < 12; i += 1) {
    const words: string[] = [];
    for (let w = 0; w < 14; w += 1) {
      words.push(vocabulary[(cursor + w * 7) % vocabulary.length]!);
      cursor += 1;
    }
    const audio = synthesize(lexicon, words);
    const wavPath = path.join(dir, 'audio', `utt-${i}.wav`);
    writeWavPcm16(wavPath, audio);
    manifestLines.push(`utt-${i}\taudio/utt-${i}.wav\t${words.join(' ')}`);
  }
  const manifest = path.join(dir, 'tones.tsv');
  fs.writeFileSync(manifest, manifestLines.join('\n') + '\n');

  const outDir = path.join(dir, 'out');
  const backend = `exec:node ${path.join(DIST_SRC, 'asr.js')} --model ${LEXICON_PATH}`;
  const stdout = runPrimary([
    'detect',
    '--manifest', manifest,
    '--backend', backend,
    '--noise-placement', 'begin',
    '--noise-amplitude', '0.5',
    '--noise-duration', '1.0',
    '--seed', '3',
    '--out-dir', outDir,
  ]);
  const summary = JSON.parse(stdout.trim().split('\n').pop()!);
  assert.equal(summary.n_evaluated, 12);

  const report = JSON.parse(
    fs.readFileSync(path.join(outDir, 'detection_report.json'), 'utf-8'),
  ) as DetectionReport;
  assertSchemaValid(report);
  // clean tone audio decodes perfectly, so every utterance is perturb-eligible
  assert.equal(report.n_evaluated, 12);
  assert.equal(report.n_perturbed, 12);
  for (const record of report.natural_records) {
    assert.equal(record.wer, 0);
    assert.equal(record.error_class, 'CLEAN');
  }
  for (const record of report.perturbed_records) {
    assert.ok(typeof record.wer === 'number');
  }
});

test('primary detect completes against the LM adapter', () => {
  const dir = mkTemp('lm-integration-');
  const fixture = JSON.parse(
    execFileSync(
      PYTHON,
      [path.join(ASSETS, '..', 'test', 'fixtures', 'gen_sim_fixture.py'), dir, CORPUS_PATH],
      { encoding: 'utf-8', timeout: 60_000 },
    ).trim(),
  ) as { manifest: string; sim_config: string };

  const outDir = path.join(dir, 'out');
  const lmSpec = `exec:node ${path.join(DIST_SRC, 'lm.js')} --model ${CORPUS_PATH}`;
  const stdout = runPrimary([
    'detect',
    '--manifest', fixture.manifest,
    '--backend', `sim:${fixture.sim_config}`,
    '--lm', lmSpec,
    '--seed', '5',
    '--out-dir', outDir,
  ]);
  const summary = JSON.parse(stdout.trim().split('\n').pop()!);

  const report = JSON.parse(
    fs.readFileSync(path.join(outDir, 'detection_report.json'), 'utf-8'),
  ) as DetectionReport;
  assertSchemaValid(report);
  // every perturbed utterance hallucinates a fluent English pool sentence;
  // the external provider's perplexity is what lets the detector count them
  assert.equal(report.n_perturbed, 12);
  assert.ok(report.perturbed_halluc_rate >= 0.9, `rate ${report.perturbed_halluc_rate}`);
  assert.ok(report.susceptibility_score <= -0.9, `score ${report.susceptibility_score}`);
  for (const record of report.perturbed_records) {
    assert.ok(typeof record.ppl === 'number' && (record.ppl as number) > 0);
    assert.ok((record.ppl as number) < 200);
  }
  assert.equal(summary.n_evaluated, 12);
});
