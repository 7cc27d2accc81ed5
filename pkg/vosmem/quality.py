"""Segmentation-quality scores: per-object scoring, per-frame aggregation and
normalization against the annotated frame.

The trained quality network is replaced by :class:`OracleScorer`, whose
noiseless output is exactly the IoU training target of that network.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from vosmem.core import LabeledMaskSet, ObjectMask
from vosmem.errors import (
    AlignmentError,
    DegenerateAnchorError,
    DimensionError,
    ScoreRangeError,
)

logger = logging.getLogger(__name__)

ANCHOR_FLOOR = 1e-6


class QualityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_index: int
    per_object_scores: tuple[float, ...]
    frame_score: float
    normalized_score: float
    anchor_flagged: bool = False


def mask_iou(prediction: ObjectMask, truth: ObjectMask) -> float:
    if prediction.shape != truth.shape:
        raise DimensionError(f"mask resolutions differ: {prediction.shape} vs {truth.shape}")
    pred, gt = prediction.as_bool(), truth.as_bool()
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, gt).sum() / union)


def _check_aligned(prediction: LabeledMaskSet, truth: LabeledMaskSet) -> None:
    if prediction.object_count != truth.object_count:
        raise AlignmentError(
            f"prediction has {prediction.object_count} objects, truth has {truth.object_count}"
        )
    if prediction.shape != truth.shape:
        raise DimensionError(f"mask resolutions differ: {prediction.shape} vs {truth.shape}")


def per_object_iou(prediction: LabeledMaskSet, truth: LabeledMaskSet) -> list[float]:
    _check_aligned(prediction, truth)
    return [mask_iou(p, g) for p, g in zip(prediction.masks, truth.masks)]


def oracle_score(prediction: LabeledMaskSet, truth: LabeledMaskSet,
                 noise_sigma: float = 0.0, seed: int = 0) -> list[float]:
    """clamp(IoU + N(0, noise_sigma), 0, 1) per object.

    Noise recipe: ``np.random.default_rng(seed).normal(0.0, noise_sigma, N)``,
    one draw per object in object order.
    """
    if noise_sigma < 0:
        raise ScoreRangeError(f"noise_sigma must be >= 0, got {noise_sigma}")
    ious = per_object_iou(prediction, truth)
    if noise_sigma == 0:
        return ious
    noise = np.random.default_rng(seed).normal(0.0, noise_sigma, len(ious))
    return [float(np.clip(iou + n, 0.0, 1.0)) for iou, n in zip(ious, noise)]


class QualityScorer(ABC):
    """Maps one segmented frame to per-object quality scores in [0, 1]."""

    @abstractmethod
    def score(self, frame_index: int, image: np.ndarray, prediction: LabeledMaskSet,
              truth: Optional[LabeledMaskSet] = None) -> list[float]:
        raise NotImplementedError()


class OracleScorer(QualityScorer):
    """IoU against ground truth plus seeded Gaussian noise.

    Noise for frame ``t`` is drawn from ``seed_sequence(seed, t)`` so scoring
    frames in any order gives the same numbers.
    """

    def __init__(self, noise_sigma: float = 0.0, seed: int = 0):
        if noise_sigma < 0:
            raise ScoreRangeError(f"noise_sigma must be >= 0, got {noise_sigma}")
        self.noise_sigma = noise_sigma
        self.seed = seed

    def frame_seed(self, frame_index: int) -> int:
        return int(np.random.SeedSequence([self.seed, frame_index]).generate_state(1)[0])

    def score(self, frame_index, image, prediction, truth=None):
        if truth is None:
            raise AlignmentError("the oracle scorer needs ground truth")
        return oracle_score(prediction, truth, self.noise_sigma, self.frame_seed(frame_index))


def _validate_scores(scores: Sequence[float]) -> list[float]:
    scores = [float(s) for s in scores]
    if not scores:
        raise ScoreRangeError("at least one object score is required")
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ScoreRangeError(f"object score {s!r} outside [0, 1]")
    return scores


def aggregate_and_normalize(per_object_scores: Sequence[float], first_frame_score: float,
                            frame_index: int) -> QualityReport:
    scores = _validate_scores(per_object_scores)
    if first_frame_score <= 0:
        raise DegenerateAnchorError(f"first-frame score must be > 0, got {first_frame_score!r}")
    anchor = max(first_frame_score, ANCHOR_FLOOR)
    frame_score = float(np.mean(scores))
    normalized = 1.0 if frame_index == 0 else frame_score / anchor
    return QualityReport(
        frame_index=frame_index,
        per_object_scores=tuple(scores),
        frame_score=frame_score,
        normalized_score=normalized,
        anchor_flagged=first_frame_score < ANCHOR_FLOOR,
    )


class QualityTracker:
    """Per-video normalizer: frame 0's raw score becomes the anchor."""

    def __init__(self):
        self.anchor: Optional[float] = None
        self.flagged = False

    def report(self, per_object_scores: Sequence[float], frame_index: int) -> QualityReport:
        if frame_index == 0:
            raw = float(np.mean(_validate_scores(per_object_scores)))
            self.flagged = raw < ANCHOR_FLOOR
            self.anchor = max(raw, ANCHOR_FLOOR)
            if self.flagged:
                logger.warning("annotated-frame score %.3g below %.0e; normalizing by the floor",
                               raw, ANCHOR_FLOOR)
        if self.anchor is None:
            raise DegenerateAnchorError("frame 0 must be scored before any other frame")
        report = aggregate_and_normalize(per_object_scores, self.anchor, frame_index)
        if self.flagged:
            report = report.model_copy(update={"anchor_flagged": True})
        return report


def scorer_mse(predicted_scores: Sequence[float], predictions: LabeledMaskSet,
               truths: LabeledMaskSet) -> float:
    ious = per_object_iou(predictions, truths)
    if len(predicted_scores) != len(ious):
        raise AlignmentError(f"{len(predicted_scores)} scores for {len(ious)} objects")
    diff = np.asarray(predicted_scores, dtype=np.float64) - np.asarray(ious)
    return float(np.mean(diff ** 2))


class ScoreHistogram(BaseModel):
    bin_edges: tuple[float, ...]
    score_counts: tuple[int, ...]
    iou_counts: tuple[int, ...]
    correlation: Optional[float]


def score_iou_histogram(scores: Sequence[float], ious: Sequence[float],
                        bin_width: float = 0.05) -> ScoreHistogram:
    """Distribution of predicted scores next to true IoUs, plus their Pearson correlation."""
    scores, ious = np.asarray(scores, dtype=np.float64), np.asarray(ious, dtype=np.float64)
    if scores.shape != ious.shape:
        raise AlignmentError(f"{scores.size} scores for {ious.size} IoUs")
    edges = np.linspace(0.0, 1.0, int(round(1.0 / bin_width)) + 1)
    score_counts, _ = np.histogram(scores, bins=edges)
    iou_counts, _ = np.histogram(ious, bins=edges)
    correlation = None
    if scores.size > 1 and scores.std() > 0 and ious.std() > 0:
        correlation = float(np.corrcoef(scores, ious)[0, 1])
    return ScoreHistogram(
        bin_edges=tuple(float(e) for e in edges),
        score_counts=tuple(int(c) for c in score_counts),
        iou_counts=tuple(int(c) for c in iou_counts),
        correlation=correlation,
    )
