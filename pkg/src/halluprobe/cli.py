"""Command-line entry point.

Subcommands: evaluate, perturb, corrupt, detect, provenance, report, and
simulate-backend (which serves the simulator over the wire protocol so the
toolkit can test its own external-backend path). Exit codes: 0 success,
1 run-level error, 2 usage error. Diagnostics go to stderr; machine output
goes to files and a single JSON summary line on stdout.

A JSON config file (--config) may supply any long flag's value under its
dashed name; values given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .audio import load_audio, save_audio, wav_encoding
from .backend import ExternalBackend, SimBackendConfig, SimulatedBackend
from .corpus import Corpus, load_manifest, write_manifest
from .corruptor import CorruptionScheme, SchemeKind, corrupt
from .detector import (
    EvalRecord,
    MetricSuite,
    Phase,
    compare_distributions,
    detect,
    evaluate_corpus,
)
from .errors import InvalidConfigError, ToolkitError
from .lm import ExternalLmProvider, SmoothingConfig
from .perturb import MixMode, NoiseSpec, Placement, apply_noise, spec_for_utterance
from .provenance import build_index, provenance_report
from .reporting import export_report, write_ratio_table, write_records_csv
from .simserver import SimulatorService, serve_stdio, serve_tcp
from .taxonomy import ErrorClass, Thresholds
from .textscores import corpus_bleu, corpus_chrf2, rouge1

logger = logging.getLogger("halluprobe")

# flags a config file may supply; validated after the merge so missing ones
# still count as usage errors
_REQUIRED = {
    "evaluate": ("manifest", "backend"),
    "perturb": ("manifest",),
    "corrupt": ("manifest", "scheme", "volume"),
    "detect": ("manifest", "backend"),
    "provenance": ("report", "train_manifest"),
    "report": ("run",),
    "simulate-backend": ("manifest", "sim_config"),
}


class _UsageError(Exception):
    pass


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, default=0, help="global seed for noise/corruption")
    parser.add_argument("--out-dir", default="halluprobe-out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel utterance workers")


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t-wer", type=float, default=30.0)
    parser.add_argument("--t-cos", type=float, default=0.2)
    parser.add_argument("--t-ppl", type=float, default=200.0)
    parser.add_argument(
        "--lm",
        default="builtin:2,0.1",
        help="perplexity provider: builtin:<order>,<k> | exec:<cmd> | tcp:<host:port>",
    )
    parser.add_argument(
        "--lm-train",
        help="manifest whose references train the builtin LM (default: the evaluated manifest)",
    )
    parser.add_argument(
        "--vector-mode",
        choices=["tfidf", "count"],
        default="tfidf",
        help="sentence representation for cosine similarity",
    )


def _add_noise_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--noise-placement", choices=["begin", "whole"], default="begin")
    parser.add_argument("--noise-amplitude", type=float, default=0.5)
    parser.add_argument("--noise-duration", type=float, default=1.0, help="seconds, begin placement only")
    parser.add_argument("--noise-mode", choices=["add", "replace"], default="add")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halluprobe")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="transcribe a corpus and score every output")
    p_eval.add_argument("--manifest")
    p_eval.add_argument("--backend", help="sim:<cfg.json> | exec:<cmd> | tcp:<host:port>")
    _add_metric_flags(p_eval)
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_perturb = sub.add_parser("perturb", help="write noise-perturbed copies of a corpus")
    p_perturb.add_argument("--manifest")
    _add_noise_flags(p_perturb)
    _add_common_flags(p_perturb)
    p_perturb.set_defaults(func=_cmd_perturb)

    p_corrupt = sub.add_parser("corrupt", help="build a label-mismatched noisy training set")
    p_corrupt.add_argument("--manifest")
    p_corrupt.add_argument("--scheme", choices=["uu", "rr", "ru", "ur"])
    p_corrupt.add_argument("--volume", help="fraction in (0,1) or absolute count, e.g. 0.08 or 10000")
    p_corrupt.add_argument("--rr-pairs", type=int, default=10)
    _add_common_flags(p_corrupt)
    p_corrupt.set_defaults(func=_cmd_corrupt)

    p_detect = sub.add_parser("detect", help="run the perturbation-based hallucination detection loop")
    p_detect.add_argument("--manifest")
    p_detect.add_argument("--backend", help="sim:<cfg.json> | exec:<cmd> | tcp:<host:port>")
    _add_metric_flags(p_detect)
    _add_noise_flags(p_detect)
    p_detect.add_argument("--full-metrics", action="store_true", help="compute cos/ppl for low-WER outputs too")
    p_detect.add_argument("--exclude-zero-wer", action="store_true", help="drop WER=0 records from WER histograms")
    p_detect.add_argument("--bins", type=int, default=20)
    _add_common_flags(p_detect)
    p_detect.set_defaults(func=_cmd_detect)

    p_prov = sub.add_parser("provenance", help="match hallucinations against training transcripts")
    p_prov.add_argument("--report", help="detection_report.json from a detect run")
    p_prov.add_argument("--train-manifest")
    p_prov.add_argument("--top-k", type=int, default=5)
    p_prov.add_argument("--copy-threshold", type=float, default=0.95)
    _add_common_flags(p_prov)
    p_prov.set_defaults(func=_cmd_provenance)

    p_report = sub.add_parser("report", help="merge detect runs into the hallucination-ratio table")
    p_report.add_argument(
        "--run",
        action="append",
        metavar="MODEL:DATASET:PATH",
        help="detection_report.json labeled with model and dataset names; repeatable",
    )
    _add_common_flags(p_report)
    p_report.set_defaults(func=_cmd_report)

    p_serve = sub.add_parser("simulate-backend", help="serve the simulator over the wire protocol")
    p_serve.add_argument("--manifest")
    p_serve.add_argument("--sim-config", help="simulator config JSON")
    p_serve.add_argument("--tcp", help="host:port to listen on (default: stdio)")
    p_serve.add_argument("--lm-order", type=int, default=2)
    p_serve.add_argument("--lm-k", type=float, default=0.1)
    _add_common_flags(p_serve)
    p_serve.set_defaults(func=_cmd_simulate_backend)

    return parser


def _apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    if not args.config:
        return
    path = Path(args.config)
    if not path.is_file():
        raise InvalidConfigError(f"config file not found: {path}")
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"config file is not valid JSON: {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise InvalidConfigError(f"config file must hold a JSON object: {path}")
    given = set()
    for arg in argv:
        if arg.startswith("--"):
            given.add(arg[2:].split("=", 1)[0])
    for key, value in values.items():
        dest = key.replace("-", "_")
        if key in given or not hasattr(args, dest):
            continue
        setattr(args, dest, value)


def _load_sim_config(path: str) -> SimBackendConfig:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise InvalidConfigError(f"simulator config not found: {cfg_path}")
    try:
        data = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"simulator config is not valid JSON: {cfg_path}: {exc}") from exc
    return SimBackendConfig.from_json_dict(data)


def _build_backend(spec: str, jobs: int):
    if spec.startswith("sim:"):
        return SimulatedBackend(_load_sim_config(spec[len("sim:") :]))
    if spec.startswith(("exec:", "tcp:")):
        if jobs > 1:
            return lambda: ExternalBackend(spec)
        return ExternalBackend(spec)
    raise InvalidConfigError(f"unknown backend spec {spec!r} (expected sim:, exec:, or tcp:)")


def _build_metrics(args: argparse.Namespace, corpus: Corpus) -> MetricSuite:
    lm_spec: str = args.lm
    if lm_spec.startswith("builtin:"):
        params = lm_spec[len("builtin:") :] or "2,0.1"
        try:
            order_text, k_text = params.split(",")
            order, k = int(order_text), float(k_text)
        except ValueError as exc:
            raise InvalidConfigError(f"bad builtin LM spec {lm_spec!r}, expected builtin:<order>,<k>") from exc
        lm_texts = None
        if args.lm_train:
            lm_texts = [u.reference for u in load_manifest(args.lm_train)]
        return MetricSuite.build(
            corpus,
            lm_texts=lm_texts,
            lm_order=order,
            lm_smoothing=SmoothingConfig(k=k),
            vector_mode=args.vector_mode,
        )
    if lm_spec.startswith(("exec:", "tcp:")):
        return MetricSuite.build(corpus, lm=ExternalLmProvider(lm_spec), vector_mode=args.vector_mode)
    raise InvalidConfigError(f"unknown LM spec {lm_spec!r} (expected builtin:, exec:, or tcp:)")


def _noise_spec(args: argparse.Namespace) -> NoiseSpec:
    return NoiseSpec(
        placement=Placement(args.noise_placement),
        amplitude=args.noise_amplitude,
        duration_s=args.noise_duration if args.noise_placement == "begin" else None,
        mode=MixMode(args.noise_mode),
        seed=args.seed,
    )


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")


def _cmd_evaluate(args: argparse.Namespace) -> int:
    corpus = load_manifest(args.manifest)
    metrics = _build_metrics(args, corpus)
    backend = _build_backend(args.backend, args.jobs)
    thresholds = Thresholds(t_wer=args.t_wer, t_cos=args.t_cos, t_ppl=args.t_ppl)
    records = evaluate_corpus(backend, corpus, metrics, thresholds, jobs=args.jobs, full_metrics=True)

    ok = [r for r in records if r.ok]
    total_errors = sum(r.alignment.distance for r in ok if r.alignment)
    total_ref = sum(r.alignment.ref_len for r in ok if r.alignment)
    refs = [r.reference for r in ok]
    hyps = [r.hypothesis or "" for r in ok]
    class_counts = {cls.value: 0 for cls in ErrorClass}
    for record in ok:
        if record.error_class is not None:
            class_counts[record.error_class.value] += 1
    summary = {
        "schema": "halluprobe/evaluation/1",
        "manifest": str(args.manifest),
        "n_utterances": len(records),
        "n_failures": len(records) - len(ok),
        "corpus_wer": 100.0 * total_errors / total_ref if total_ref else 0.0,
        "corpus_bleu": corpus_bleu(refs, hyps),
        "corpus_chrf2": corpus_chrf2(refs, hyps),
        "mean_rouge1": sum(rouge1(r, h) for r, h in zip(refs, hyps)) / len(ok) if ok else 0.0,
        "class_counts": class_counts,
    }
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "evaluation.json").write_text(
        json.dumps({**summary, "records": [r.to_json_dict() for r in records]}, indent=2) + "\n",
        encoding="utf-8",
    )
    write_records_csv(out / "records.csv", records)
    _emit(summary)
    return 0


def _cmd_perturb(args: argparse.Namespace) -> int:
    corpus = load_manifest(args.manifest)
    base_spec = _noise_spec(args)
    out = Path(args.out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    rows = []
    for utt in corpus:
        wave = load_audio(utt.audio_path)
        perturbed = apply_noise(wave, spec_for_utterance(base_spec, utt.id))
        wav_path = out / "audio" / f"{utt.id}.wav"
        save_audio(wav_path, perturbed, encoding=wav_encoding(utt.audio_path))
        rows.append((utt.id, f"audio/{utt.id}.wav", utt.reference))
    manifest_path = out / "perturbed.tsv"
    with manifest_path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write("\t".join(row) + "\n")
    _emit({"perturbed_manifest": str(manifest_path), "n_utterances": len(rows)})
    return 0


def _parse_volume(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise InvalidConfigError(f"volume must be a number, got {text!r}") from exc
    return value


def _cmd_corrupt(args: argparse.Namespace) -> int:
    corpus = load_manifest(args.manifest)
    scheme = CorruptionScheme(
        kind=SchemeKind(args.scheme.upper()),
        volume=_parse_volume(str(args.volume)),
        rr_pair_count=args.rr_pairs,
        seed=args.seed,
    )
    corrupted, manifest = corrupt(corpus, scheme)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv_path = out / f"corrupted_{args.scheme}.tsv"
    write_manifest(corrupted, tsv_path)
    sidecar = out / f"corruption_manifest_{args.scheme}.json"
    sidecar.write_text(json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    _emit(
        {
            "corrupted_manifest": str(tsv_path),
            "corruption_sidecar": str(sidecar),
            "n_injected": len(manifest.corrupted_ids),
            "n_total": len(corrupted),
        }
    )
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    corpus = load_manifest(args.manifest)
    metrics = _build_metrics(args, corpus)
    backend = _build_backend(args.backend, args.jobs)
    thresholds = Thresholds(t_wer=args.t_wer, t_cos=args.t_cos, t_ppl=args.t_ppl)
    noise = _noise_spec(args)
    report = detect(
        backend,
        corpus,
        thresholds,
        noise,
        metrics,
        jobs=args.jobs,
        full_metrics=args.full_metrics,
    )
    paths = export_report(
        report,
        args.out_dir,
        model_label=args.backend,
        dataset_label=Path(args.manifest).stem,
        exclude_zero_wer=args.exclude_zero_wer,
        histogram_bins=args.bins,
    )
    distributions = compare_distributions(report, bins=args.bins)
    dist_path = Path(args.out_dir) / "distributions.json"
    dist_path.write_text(json.dumps(distributions.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    _emit(
        {
            "natural_halluc_rate": report.natural_halluc_rate,
            "perturbed_halluc_rate": report.perturbed_halluc_rate,
            "susceptibility_score": report.susceptibility_score,
            "n_evaluated": report.n_evaluated,
            "n_perturbed": report.n_perturbed,
            "report_json": str(paths["report_json"]),
        }
    )
    return 0


def _cmd_provenance(args: argparse.Namespace) -> int:
    report_path = Path(args.report)
    if not report_path.is_file():
        raise InvalidConfigError(f"detection report not found: {report_path}")
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    train = load_manifest(args.train_manifest)
    index = build_index({u.id: u.reference for u in train})

    hallucinated = []
    for section in ("natural_records", "perturbed_records"):
        for row in payload.get(section, []):
            if row.get("error_class") == ErrorClass.HALLUCINATION.value and row.get("hypothesis"):
                hallucinated.append(
                    EvalRecord(
                        utterance_id=row["utterance_id"],
                        phase=Phase(row["phase"]),
                        reference=row.get("reference", ""),
                        hypothesis=row["hypothesis"],
                        alignment=None,
                        wer=row.get("wer"),
                        cos=row.get("cos"),
                        ppl=row.get("ppl"),
                        oscillating=bool(row.get("oscillating")),
                        error_class=ErrorClass.HALLUCINATION,
                    )
                )
    entries = provenance_report(index, hallucinated, k=args.top_k, copy_threshold=args.copy_threshold)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov_path = out / "provenance.json"
    prov_path.write_text(
        json.dumps(
            {
                "schema": "halluprobe/provenance/1",
                "copy_threshold": args.copy_threshold,
                "entries": [e.to_json_dict() for e in entries],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    copied = sum(1 for e in entries if e.verdict == "COPIED")
    _emit({"provenance_json": str(prov_path), "n_hallucinations": len(entries), "n_copied": copied})
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    rows = []
    for entry in args.run:
        parts = entry.split(":", 2)
        if len(parts) != 3:
            raise InvalidConfigError(f"bad --run value {entry!r}, expected MODEL:DATASET:PATH")
        model, dataset, path = parts
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        rows.append(
            {
                "model": model,
                "dataset": dataset,
                "natural_halluc_rate": payload["natural_halluc_rate"],
                "perturbed_halluc_rate": payload["perturbed_halluc_rate"],
                "susceptibility_score": payload["susceptibility_score"],
            }
        )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "hallucination_ratio.csv"
    write_ratio_table(table_path, rows)
    _emit({"ratio_table": str(table_path), "n_runs": len(rows)})
    return 0


def _cmd_simulate_backend(args: argparse.Namespace) -> int:
    corpus = load_manifest(args.manifest)
    service = SimulatorService(
        _load_sim_config(args.sim_config), corpus, lm_order=args.lm_order, lm_k=args.lm_k
    )
    if args.tcp:
        host, _, port_text = args.tcp.rpartition(":")
        serve_tcp(service, host or "127.0.0.1", int(port_text))
    else:
        serve_stdio(service)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config_file(args, argv)
        for dest in _REQUIRED.get(args.command, ()):
            if getattr(args, dest, None) in (None, []):
                raise _UsageError(f"missing required option --{dest.replace('_', '-')}")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
