"""Histogram binning and file export for detection reports.

All exports are byte-stable: fixed field order, no timestamps, newline
endings pinned, so re-exporting the same report reproduces identical files.
Plot data is emitted as CSV for external plotters; no images are rendered.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .detector import DetectionReport

WER_HISTOGRAM_RANGE = (0.0, 200.0)
COS_HISTOGRAM_RANGE = (0.0, 1.0)
PPL_HISTOGRAM_RANGE = (0.0, 1000.0)


@dataclass(frozen=True)
class HistogramData:
    metric: str
    phase: str
    edges: tuple[float, ...]
    counts: tuple[int, ...]
    clipped: int

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "phase": self.phase,
            "edges": list(self.edges),
            "counts": list(self.counts),
            "clipped": self.clipped,
        }


def histogram(
    values: Sequence[float],
    bins: int,
    lo: float,
    hi: float,
    metric: str = "",
    phase: str = "",
) -> HistogramData:
    """Fixed-width binning over [lo, hi); out-of-range values clamp to the
    edge bins and are tallied in the clipped count. Bin counts always sum to
    len(values)."""
    if bins < 1:
        raise ValueError("at least one bin is required")
    if not hi > lo:
        raise ValueError("histogram range must be non-degenerate")
    width = (hi - lo) / bins
    counts = [0] * bins
    clipped = 0
    for value in values:
        idx = int((value - lo) / width)
        if value < lo:
            idx = 0
            clipped += 1
        elif idx >= bins:
            # hi itself belongs to the last bin; anything beyond is clamped
            if value > hi:
                clipped += 1
            idx = bins - 1
        counts[idx] += 1
    edges = tuple(lo + i * width for i in range(bins + 1))
    return HistogramData(metric=metric, phase=phase, edges=edges, counts=tuple(counts), clipped=clipped)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_records_csv(path: Path, records: Sequence) -> None:
    """Per-record metric table; accepts any iterable of EvalRecords."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "utterance_id",
                "phase",
                "wer",
                "cos",
                "ppl",
                "error_class",
                "substitutions",
                "insertions",
                "deletions",
                "ref_len",
                "oscillating",
                "failure",
                "reference",
                "hypothesis",
            ]
        )
        for record in records:
            a = record.alignment
            writer.writerow(
                [
                    record.utterance_id,
                    record.phase.value,
                    "" if record.wer is None else f"{record.wer:.6f}",
                    "" if record.cos is None else f"{record.cos:.6f}",
                    "" if record.ppl is None else f"{record.ppl:.6f}",
                    "" if record.error_class is None else record.error_class.value,
                    "" if a is None else a.substitutions,
                    "" if a is None else a.insertions,
                    "" if a is None else a.deletions,
                    "" if a is None else a.ref_len,
                    int(record.oscillating),
                    record.failure or "",
                    record.reference,
                    record.hypothesis or "",
                ]
            )


def _write_histogram_csv(path: Path, histograms: Sequence[HistogramData]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "phase", "bin_lo", "bin_hi", "count", "clipped_total"])
        for hist in histograms:
            for i, count in enumerate(hist.counts):
                writer.writerow(
                    [
                        hist.metric,
                        hist.phase,
                        f"{hist.edges[i]:.6f}",
                        f"{hist.edges[i + 1]:.6f}",
                        count,
                        hist.clipped,
                    ]
                )


def _write_class_counts_csv(path: Path, report: "DetectionReport") -> None:
    from .detector import Phase

    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["phase", "error_class", "count"])
        for phase in (Phase.NATURAL, Phase.PERTURBED):
            for cls, count in report.class_counts(phase).items():
                writer.writerow([phase.value, cls, count])


def write_ratio_table(path: Path, rows: Sequence[dict]) -> None:
    """Hallucination-ratio table: one row per (model, dataset) run."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["model", "dataset", "natural_halluc_rate", "perturbed_halluc_rate", "susceptibility_score"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["model"],
                    row["dataset"],
                    f"{row['natural_halluc_rate']:.6f}",
                    f"{row['perturbed_halluc_rate']:.6f}",
                    f"{row['susceptibility_score']:.6f}",
                ]
            )


def export_report(
    report: "DetectionReport",
    out_dir: str | Path,
    model_label: str = "backend",
    dataset_label: str = "corpus",
    exclude_zero_wer: bool = False,
    histogram_bins: int = 20,
) -> dict[str, Path]:
    """Write the full JSON report, per-record CSV, histogram CSVs, and the
    per-model/per-dataset hallucination-ratio table. Returns written paths."""
    from .detector import Phase, compare_distributions

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["report_json"] = out / "detection_report.json"
    _write_json(paths["report_json"], report.to_json_dict())

    paths["records_csv"] = out / "records.csv"
    write_records_csv(paths["records_csv"], list(report.natural_records) + list(report.perturbed_records))

    summary = compare_distributions(report, bins=histogram_bins)
    histograms = list(summary.histograms)
    if exclude_zero_wer:
        filtered = []
        for hist in histograms:
            if hist.metric != "wer":
                filtered.append(hist)
                continue
            records = report.natural_records if hist.phase == Phase.NATURAL.value else report.perturbed_records
            values = [r.wer for r in records if r.wer is not None and r.wer != 0.0]
            lo, hi = hist.edges[0], hist.edges[-1]
            filtered.append(histogram(values, len(hist.counts), lo, hi, metric="wer", phase=hist.phase))
        histograms = filtered
    paths["histograms_csv"] = out / "histograms.csv"
    _write_histogram_csv(paths["histograms_csv"], histograms)

    paths["class_counts_csv"] = out / "class_counts.csv"
    _write_class_counts_csv(paths["class_counts_csv"], report)

    paths["ratio_csv"] = out / "hallucination_ratio.csv"
    write_ratio_table(
        paths["ratio_csv"],
        [
            {
                "model": model_label,
                "dataset": dataset_label,
                "natural_halluc_rate": report.natural_halluc_rate,
                "perturbed_halluc_rate": report.perturbed_halluc_rate,
                "susceptibility_score": report.susceptibility_score,
            }
        ],
    )
    return paths
