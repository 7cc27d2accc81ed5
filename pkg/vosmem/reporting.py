"""CSV tables and the run manifest.

All CSV files are UTF-8 with a header row and ``\\n`` line endings. Floats are
written with fixed precision so reruns compare byte for byte; the columns in
``TIMING_COLUMNS`` are the only nondeterministic ones.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from vosmem import __version__
from vosmem.errors import OutputError
from vosmem.harness import BenchRow, SweepRow
from vosmem.metrics import EvalResult

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

FRAME_COLUMNS = [
    "frame", "j", "f", "jf", "bank_size", "decision", "admitted", "evicted_frame",
    "quality", "predicted_score", "true_iou", "corrupted", "wall_time_s",
]
SUMMARY_COLUMNS = [
    "seed", "frames", "mean_j", "mean_f", "mean_jf", "j_recall", "j_decay", "f_recall", "f_decay",
    "score_correlation", "anchor_flagged", "final_occupancy", "mean_wall_time_s",
]
SWEEP_COLUMNS = ["axis", "value", "seeds", "mean_j", "mean_f", "mean_jf", "std_jf", "mean_occupancy"]
BENCH_COLUMNS = ["frame_count", "eviction", "bucket_start", "bucket_end", "p50_ms", "p90_ms", "occupancy"]
TIMING_COLUMNS = frozenset({"wall_time_s", "mean_wall_time_s", "p50_ms", "p90_ms"})


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return "nan"
        return f"{value:.6f}"
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_cell(row.get(column)) for column in columns])
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.debug("wrote %s", path)
    return path


def frame_rows(result: EvalResult) -> list[dict]:
    rows = []
    for record in result.frames:
        row = record.model_dump()
        row["admitted"] = record.decision == "admitted"
        rows.append(row)
    return rows


def summary_row(seed: Any, result: EvalResult) -> dict:
    j_stats, f_stats = result.j_stats, result.f_stats
    return {
        "seed": seed,
        "frames": len(result.frames),
        "mean_j": result.mean_j,
        "mean_f": result.mean_f,
        "mean_jf": result.mean_jf,
        "j_recall": j_stats.recall,
        "j_decay": j_stats.decay,
        "f_recall": f_stats.recall,
        "f_decay": f_stats.decay,
        "score_correlation": result.score_correlation,
        "anchor_flagged": result.anchor_flagged,
        "final_occupancy": result.occupancy[-1],
        "mean_wall_time_s": float(np.mean(result.wall_times)),
    }


def mean_row(rows: Sequence[dict]) -> dict:
    """Column means over per-seed summary rows."""
    row: dict[str, Any] = {"seed": "mean"}
    for column in SUMMARY_COLUMNS[1:]:
        values = [r[column] for r in rows if r[column] is not None]
        row[column] = float(np.mean([float(v) for v in values])) if values else None
    return row


def write_frame_csv(path: Path, result: EvalResult) -> Path:
    return write_csv(path, FRAME_COLUMNS, frame_rows(result))


def write_summary_csv(path: Path, results: dict[int, EvalResult]) -> Path:
    rows = [summary_row(seed, result) for seed, result in sorted(results.items())]
    return write_csv(path, SUMMARY_COLUMNS, [*rows, mean_row(rows)])


def write_sweep_csv(path: Path, rows: Sequence[SweepRow]) -> Path:
    return write_csv(path, SWEEP_COLUMNS, [row.model_dump() for row in rows])


def write_bench_csv(path: Path, rows: Sequence[BenchRow]) -> Path:
    return write_csv(path, BENCH_COLUMNS, [row.model_dump() for row in rows])


class RunManifest(BaseModel):
    schema_version: int = MANIFEST_SCHEMA_VERSION
    csv_schema_version: int = CSV_SCHEMA_VERSION
    tool_version: str = __version__
    command: str
    config_digest: str
    seeds: list[int]
    outputs: dict[str, str] = Field(default_factory=dict)
    axis: Optional[str] = None
    values: Optional[list[str]] = None
    frame_counts: Optional[list[int]] = None
    config: dict


def write_manifest(path: Path, manifest: RunManifest) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def strip_timing(text: str) -> str:
    """CSV text with the timing columns removed, for reproducibility checks."""
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        return ""
    keep = [i for i, column in enumerate(rows[0]) if column not in TIMING_COLUMNS]
    return "\n".join(",".join(row[i] for i in keep) for row in rows) + "\n"
