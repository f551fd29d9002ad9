/**
 * Speech-to-text backend adapter for the halluprobe wire protocol.
 *
 * Wraps the tone-lexicon recognizer: the model asset is a lexicon JSON
 * mapping words to tone frequencies. Requests carry base64 float32 PCM or a
 * WAV path; the response is the decoded transcript. The handshake is sent
 * only after the model has loaded.
 */

import { pathToFileURL } from 'node:url';

import { decode, loadLexicon, type Lexicon } from './tones.js';
import { parseAdapterArgs, runAdapter, type Handler } from './protocol.js';
import { decodePcmF32Base64, readWav, type Audio } from './wav.js';

export function makeAsrHandler(lexicon: Lexicon): Handler {
  return (request) => {
    if (request.op !== 'transcribe') {
      throw new Error(`unsupported op ${JSON.stringify(request.op)}`);
    }
    let audio: Audio;
    if (typeof request.pcm_f32_base64 === 'string') {
      const rate = request.sample_rate;
      if (!Number.isInteger(rate) || (rate as number) <= 0) {
        throw new Error('transcribe with pcm payload requires a positive integer sample_rate');
      }
      audio = decodePcmF32Base64(request.pcm_f32_base64, rate as number);
    } else if (typeof request.audio_path === 'string') {
      audio = readWav(request.audio_path);
    } else {
      throw new Error('transcribe requires pcm_f32_base64 or audio_path');
    }
    return { transcript: decode(lexicon, audio).join(' ') };
  };
}

async function main(): Promise<void> {
  const config = parseAdapterArgs(process.argv.slice(2));
  const lexicon = loadLexicon(config.modelPath);
  await runAdapter('asr-backend', makeAsrHandler(lexicon), config);
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? '').href) {
  main().catch((err) => {
    process.stderr.write(`fatal: ${err instanceof Error ? err.message : String(err)}\n`);
    process.exit(1);
  });
}
