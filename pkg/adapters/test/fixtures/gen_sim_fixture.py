"""Build a simulator-backed detect fixture for the LM-adapter integration test.

Writes a synthetic speech corpus whose references are pseudo-word sentences
(vocabulary disjoint from English), plus a simulator config whose memorized
pool is a handful of fluent English sentences taken from the LM adapter's
own training corpus. A detect run over this fixture hallucinates fluent
English on every perturbed utterance, so the external LM provider's
perplexity decides whether hallucinations are counted.

Usage: gen_sim_fixture.py <out_dir> <lm_corpus_path>
"""

import json
import sys
from pathlib import Path

import numpy as np

from halluprobe.synth import AudioProfile, build_corpus, make_sentences, make_vocabulary


def main() -> int:
    out_dir = Path(sys.argv[1])
    lm_corpus = Path(sys.argv[2])
    rng = np.random.Generator(np.random.PCG64(5))
    references = make_sentences(make_vocabulary(60), 12, rng, min_len=8, max_len=9)
    build_corpus(
        out_dir,
        references,
        AudioProfile(kind="speech", amplitude=0.2),
        sample_rate=8000,
        duration_s=2.5,
        seed=21,
        name="simfix",
    )
    pool = [line.strip() for line in lm_corpus.read_text(encoding="utf-8").splitlines() if line.strip()][:5]
    (out_dir / "sim.json").write_text(
        json.dumps(
            {
                "p_halluc": 1.0,
                "memorized_pool": pool,
                "energy_threshold": 0.05,
                "seed": 13,
            }
        ),
        encoding="utf-8",
    )
    print(json.dumps({"manifest": str(out_dir / "simfix.tsv"), "sim_config": str(out_dir / "sim.json")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
