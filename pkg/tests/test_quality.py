import math

import numpy as np
import pytest

from vosmem.core import LabeledMaskSet, ObjectMask
from vosmem.errors import AlignmentError, DegenerateAnchorError, DimensionError, ScoreRangeError
from vosmem.quality import (
    ANCHOR_FLOOR,
    OracleScorer,
    QualityTracker,
    aggregate_and_normalize,
    mask_iou,
    oracle_score,
    score_iou_histogram,
    scorer_mse,
)


def square(shape, top, left, size):
    values = np.zeros(shape)
    values[top:top + size, left:left + size] = 1.0
    return ObjectMask(values)


def test_mask_iou_examples():
    a = square((4, 4), 0, 0, 2)
    assert mask_iou(a, a) == 1.0
    assert mask_iou(a, square((4, 4), 2, 2, 2)) == 0.0
    assert mask_iou(a, square((4, 4), 1, 1, 2)) == pytest.approx(1 / 7, abs=1e-12)


def test_mask_iou_both_empty_and_resolution():
    assert mask_iou(ObjectMask.empty(3, 3), ObjectMask.empty(3, 3)) == 1.0
    with pytest.raises(DimensionError):
        mask_iou(ObjectMask.empty(3, 3), ObjectMask.empty(4, 4))


def test_oracle_score_without_noise(block_masks):
    truth = block_masks((8, 8), [(0, 0, 4, 4), (4, 4, 8, 8)])
    assert oracle_score(truth, truth) == [1.0, 1.0]
    swapped = block_masks((8, 8), [(4, 4, 8, 8), (0, 0, 4, 4)])
    assert oracle_score(swapped, truth) == [0.0, 0.0]


def test_oracle_score_noise_recipe(block_masks):
    truth = block_masks((8, 8), [(0, 0, 4, 4), (4, 4, 8, 8)])
    prediction = block_masks((8, 8), [(0, 0, 4, 2), (4, 4, 8, 8)])
    scores = oracle_score(prediction, truth, noise_sigma=0.1, seed=42)
    noise = np.random.default_rng(42).normal(0.0, 0.1, 2)
    expected = [min(max(0.5 + noise[0], 0.0), 1.0), min(max(1.0 + noise[1], 0.0), 1.0)]
    assert scores == pytest.approx(expected, abs=1e-12)
    assert oracle_score(prediction, truth, noise_sigma=0.1, seed=42) == scores


def test_oracle_score_alignment(block_masks):
    one = block_masks((4, 4), [(0, 0, 2, 2)])
    two = block_masks((4, 4), [(0, 0, 2, 2), (2, 2, 4, 4)])
    with pytest.raises(AlignmentError):
        oracle_score(one, two)


def test_oracle_scorer_is_order_independent(block_masks):
    truth = block_masks((8, 8), [(0, 0, 4, 4)])
    prediction = block_masks((8, 8), [(0, 0, 4, 3)])
    scorer = OracleScorer(noise_sigma=0.05, seed=3)
    forward = [scorer.score(t, None, prediction, truth) for t in range(5)]
    backward = [scorer.score(t, None, prediction, truth) for t in reversed(range(5))]
    assert forward == backward[::-1]


def test_aggregate_examples():
    assert aggregate_and_normalize([0.93], 0.93, 0).normalized_score == 1.0
    report = aggregate_and_normalize([0.8, 0.9], 0.85, 7)
    assert report.frame_score == pytest.approx(0.85, abs=1e-12)
    assert report.normalized_score == pytest.approx(1.0, abs=1e-12)
    assert aggregate_and_normalize([0.72], 0.9, 3).normalized_score == pytest.approx(0.8, abs=1e-12)


def test_aggregate_errors():
    with pytest.raises(DegenerateAnchorError):
        aggregate_and_normalize([0.5], 0.0, 1)
    with pytest.raises(ScoreRangeError):
        aggregate_and_normalize([1.2], 0.9, 1)
    with pytest.raises(ScoreRangeError):
        aggregate_and_normalize([], 0.9, 1)


def test_tracker_anchors_on_frame_zero():
    tracker = QualityTracker()
    assert tracker.report([0.9, 0.7], 0).normalized_score == 1.0
    assert tracker.report([0.4], 1).normalized_score == pytest.approx(0.4 / 0.8)


def test_tracker_flags_degenerate_anchor():
    tracker = QualityTracker()
    first = tracker.report([0.0], 0)
    assert first.anchor_flagged and first.normalized_score == 1.0
    later = tracker.report([0.5], 1)
    assert later.anchor_flagged
    assert later.normalized_score == pytest.approx(0.5 / ANCHOR_FLOOR)


def test_tracker_requires_frame_zero_first():
    with pytest.raises(DegenerateAnchorError):
        QualityTracker().report([0.5], 3)


def test_scorer_mse_examples(block_masks):
    truth = block_masks((4, 4), [(0, 0, 2, 2), (2, 2, 4, 4)])
    prediction = LabeledMaskSet((ObjectMask(np.pad(np.ones((2, 1)), ((0, 2), (0, 3)))), truth.masks[1]))
    assert scorer_mse([0.5, 1.0], prediction, truth) == 0.0
    assert scorer_mse([0.6, 0.9], prediction, truth) == pytest.approx(0.01, abs=1e-12)
    single = block_masks((4, 4), [(0, 0, 2, 2)])
    assert scorer_mse([0.5], single, single) == 0.25


def test_noiseless_oracle_has_zero_mse(block_masks):
    truth = block_masks((8, 8), [(1, 1, 5, 6), (5, 0, 8, 3)])
    prediction = block_masks((8, 8), [(1, 2, 5, 6), (4, 0, 8, 2)])
    scores = OracleScorer().score(4, None, prediction, truth)
    assert scorer_mse(scores, prediction, truth) == 0.0


def test_score_iou_histogram():
    histogram = score_iou_histogram([0.1, 0.52, 0.97], [0.12, 0.5, 0.99], bin_width=0.25)
    assert histogram.bin_edges == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert histogram.score_counts == (1, 0, 1, 1)
    assert histogram.iou_counts == (1, 0, 1, 1)
    assert histogram.correlation == pytest.approx(np.corrcoef([0.1, 0.52, 0.97], [0.12, 0.5, 0.99])[0, 1])
    assert not math.isnan(histogram.correlation)


def random_mask(rng, shape, density):
    return ObjectMask((rng.random(shape) < density).astype(float))


def test_mask_iou_is_symmetric_and_bounded():
    rng = np.random.default_rng(31)
    for _ in range(200):
        shape = tuple(rng.integers(1, 9, 2))
        a, b = random_mask(rng, shape, rng.random()), random_mask(rng, shape, rng.random())
        iou = mask_iou(a, b)
        assert 0.0 <= iou <= 1.0
        assert iou == mask_iou(b, a)
        assert mask_iou(a, a) == 1.0


def test_mask_iou_of_nested_masks_is_the_area_ratio():
    rng = np.random.default_rng(32)
    for _ in range(100):
        outer = rng.random((8, 8)) < 0.7
        inner = outer & (rng.random((8, 8)) < 0.5)
        if not outer.any():
            continue
        iou = mask_iou(ObjectMask(inner.astype(float)), ObjectMask(outer.astype(float)))
        assert iou == pytest.approx(inner.sum() / outer.sum(), abs=1e-12)


def test_noisy_oracle_scores_stay_in_range(block_masks):
    prediction = block_masks((8, 8), [(0, 0, 4, 4), (4, 4, 8, 8)])
    truth = block_masks((8, 8), [(0, 0, 4, 2), (4, 4, 8, 8)])
    for seed in range(100):
        scores = oracle_score(prediction, truth, noise_sigma=0.5, seed=seed)
        assert len(scores) == 2
        assert all(0.0 <= score <= 1.0 for score in scores)


def test_normalized_score_is_frame_mean_over_anchor():
    rng = np.random.default_rng(33)
    for t in range(1, 100):
        scores = rng.random(int(rng.integers(1, 5))).tolist()
        anchor = float(rng.uniform(ANCHOR_FLOOR, 1.0))
        report = aggregate_and_normalize(scores, anchor, t)
        assert report.frame_score == pytest.approx(float(np.mean(scores)), abs=1e-12)
        assert report.normalized_score == pytest.approx(report.frame_score / anchor, abs=1e-12)
        assert not report.anchor_flagged
