"""Report files: summary table, per-instance records, plot-ready CSVs, run manifest."""

from __future__ import annotations

import csv
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..metrics import MetricReport
from .runner import RunResult, reports_from_records

SUMMARY_HEADER = ["strategy", "auroc", "prauc", "ece", "n", "api_calls", "parse_failure_rate"]
SELECTIVE_HEADER = ["strategy", "abstain_fraction", "accuracy"]
BOX_HEADER = ["strategy", "group", "n", "min", "q1", "median", "q3", "max"]
UNDEFINED = "undefined"


def fmt(x: Optional[float]) -> str:
    if x is None:
        return UNDEFINED
    return format(float(x), ".10g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def summary_rows(reports: Sequence[MetricReport]) -> list[list[str]]:
    return [[r.strategy, fmt(r.auroc), fmt(r.prauc), fmt(r.ece), str(r.n), str(r.api_calls),
             fmt(r.parse_failure_rate)] for r in reports]


def write_tables(reports: Sequence[MetricReport], out_dir: Path) -> None:
    _write_csv(out_dir / "summary.csv", SUMMARY_HEADER, summary_rows(reports))
    _write_csv(out_dir / "selective.csv", SELECTIVE_HEADER,
               [[r.strategy, fmt(f), fmt(acc)] for r in reports for f, acc in r.selective_curve])
    rows = []
    for r in reports:
        for group in ("correct", "incorrect"):
            s = r.score_stats.get(group)
            if s is None:
                rows.append([r.strategy, group, "0"] + [UNDEFINED] * 5)
            else:
                rows.append([r.strategy, group, str(s.n)] + [fmt(v) for v in s.as_row()])
    _write_csv(out_dir / "boxstats.csv", BOX_HEADER, rows)


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    try:
        out["selfdetect"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        out["selfdetect"] = "unknown"
    return out


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit_report(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "per_instance.jsonl", "w", encoding="utf-8") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")
    write_tables(result.reports, out)
    manifest = {
        "config": result.config.to_json(),
        "versions": _versions(),
        "counters": result.counters,
        "metrics": {"ece_bins": result.config.ece_bins, "prauc": "step-wise average precision",
                    "percentiles": "linear interpolation"},
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_records(results_dir) -> list[dict]:
    path = Path(results_dir) / "per_instance.jsonl"
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def rebuild_report(results_dir) -> list[MetricReport]:
    """Recompute the CSV tables from ``per_instance.jsonl`` and the manifest in ``results_dir``."""
    results_dir = Path(results_dir)
    manifest = json.loads((results_dir / "run_manifest.json").read_text(encoding="utf-8"))
    cfg = manifest["config"]
    reports = reports_from_records(load_records(results_dir), cfg["strategies"], cfg.get("ece_bins", 10))
    write_tables(reports, results_dir)
    return reports


def format_summary(reports: Sequence[MetricReport]) -> str:
    rows = [SUMMARY_HEADER] + summary_rows(reports)
    widths = [max(len(r[i]) for r in rows) for i in range(len(SUMMARY_HEADER))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
