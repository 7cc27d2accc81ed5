"""DAVIS-style evaluation: region J, boundary F and their sequence statistics."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.ndimage import binary_dilation, binary_erosion

from vosmem.core import ObjectMask
from vosmem.errors import ResolutionError
from vosmem.quality import ScoreHistogram, mask_iou, score_iou_histogram

__all__ = [
    "mask_iou", "boundary_map", "disc_footprint", "default_tolerance", "boundary_f",
    "SequenceStats", "sequence_stats", "FrameRecord", "EvalResult",
]

BOUNDARY_RATIO = 0.008
RECALL_THRESHOLD = 0.5
DECAY_BINS = 4


def boundary_map(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a background pixel among their 8 neighbours inside the frame."""
    mask = np.asarray(mask, dtype=bool)
    return mask & ~binary_erosion(mask, structure=np.ones((3, 3), dtype=bool), border_value=1)


def disc_footprint(radius: int) -> np.ndarray:
    offsets = np.arange(-radius, radius + 1)
    return offsets[:, None] ** 2 + offsets[None, :] ** 2 <= radius ** 2


def default_tolerance(height: int, width: int) -> int:
    return max(1, math.ceil(BOUNDARY_RATIO * math.hypot(height, width)))


def boundary_f(prediction: ObjectMask, truth: ObjectMask, tolerance_px: Optional[int] = None) -> float:
    if prediction.shape != truth.shape:
        raise ResolutionError(f"mask resolutions differ: {prediction.shape} vs {truth.shape}")
    if tolerance_px is None:
        tolerance_px = default_tolerance(*truth.shape)
    if tolerance_px < 1:
        raise ResolutionError(f"tolerance must be a positive pixel count, got {tolerance_px}")

    pred_boundary = boundary_map(prediction.as_bool())
    truth_boundary = boundary_map(truth.as_bool())
    pred_count, truth_count = int(pred_boundary.sum()), int(truth_boundary.sum())
    if pred_count == 0 and truth_count == 0:
        return 1.0
    if pred_count == 0 or truth_count == 0:
        return 0.0

    footprint = disc_footprint(tolerance_px)
    truth_zone = binary_dilation(truth_boundary, structure=footprint)
    pred_zone = binary_dilation(pred_boundary, structure=footprint)
    precision = int((pred_boundary & truth_zone).sum()) / pred_count
    recall = int((truth_boundary & pred_zone).sum()) / truth_count
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class SequenceStats(BaseModel):
    mean: float
    recall: float
    decay: float


def sequence_stats(values: Sequence[float]) -> SequenceStats:
    """Mean, recall (share of frames above 0.5) and decay (first minus last quarter)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return SequenceStats(mean=float("nan"), recall=float("nan"), decay=float("nan"))
    ids = np.round(np.linspace(1, values.size, DECAY_BINS + 1) + 1e-10).astype(int) - 1
    bins = [values[ids[i]:ids[i + 1] + 1] for i in range(DECAY_BINS)]
    return SequenceStats(
        mean=float(values.mean()),
        recall=float(np.mean(values > RECALL_THRESHOLD)),
        decay=float(bins[0].mean() - bins[-1].mean()),
    )


class FrameRecord(BaseModel):
    frame: int
    j: float
    f: float
    jf: float
    bank_size: int
    decision: str
    evicted_frame: Optional[int] = None
    quality: float
    predicted_score: float = Field(description="mean raw scorer output before normalization")
    true_iou: float
    corrupted: bool = False
    wall_time_s: float = 0.0


class EvalResult(BaseModel):
    """Per-frame records plus aggregates; means skip the annotated frame 0."""

    frames: list[FrameRecord]
    anchor_flagged: bool = False

    @property
    def scored(self) -> list[FrameRecord]:
        return [record for record in self.frames if record.frame > 0]

    @property
    def j_values(self) -> list[float]:
        return [record.j for record in self.scored]

    @property
    def f_values(self) -> list[float]:
        return [record.f for record in self.scored]

    @property
    def mean_j(self) -> float:
        return float(np.mean(self.j_values))

    @property
    def mean_f(self) -> float:
        return float(np.mean(self.f_values))

    @property
    def mean_jf(self) -> float:
        return (self.mean_j + self.mean_f) / 2

    @property
    def j_stats(self) -> SequenceStats:
        return sequence_stats(self.j_values)

    @property
    def f_stats(self) -> SequenceStats:
        return sequence_stats(self.f_values)

    @property
    def occupancy(self) -> list[int]:
        return [record.bank_size for record in self.frames]

    @property
    def wall_times(self) -> list[float]:
        return [record.wall_time_s for record in self.frames]

    @property
    def score_histogram(self) -> ScoreHistogram:
        return score_iou_histogram([r.predicted_score for r in self.scored], [r.true_iou for r in self.scored])

    @property
    def score_correlation(self) -> Optional[float]:
        return self.score_histogram.correlation
