"""Slow reference implementations, written loop by loop, used by the test
suite and the ``check-metrics`` command to cross-check the vectorized code."""
from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel

from vosmem.core import FeatureGrid, ObjectMask
from vosmem.errors import OracleMismatchError
from vosmem.metrics import boundary_f
from vosmem.models import NormModeEnum
from vosmem.quality import mask_iou
from vosmem.readout import memory_read


def brute_force_read(query_key: FeatureGrid, query_value: FeatureGrid, memory_key: FeatureGrid,
                     memory_value: FeatureGrid, mode: NormModeEnum = NormModeEnum.SOFTMAX) -> np.ndarray:
    """``(H*W, C_q + C_m)`` combined rows from explicit loops over query, memory and channels."""
    qk, qv = query_key.locations, query_value.locations
    mk, mv = memory_key.locations, memory_value.locations
    rows = []
    for i in range(qk.shape[0]):
        scores = []
        for j in range(mk.shape[0]):
            total = 0.0
            for c in range(qk.shape[1]):
                total += qk[i, c] * mk[j, c]
            scores.append(total)
        if mode == NormModeEnum.SOFTMAX:
            peak = max(scores)
            exps = [math.exp(s - peak) for s in scores]
            norm = sum(exps)
            weights = [e / norm for e in exps]
        else:
            norm = sum(scores)
            weights = [s / norm for s in scores]
        retrieved = [sum(weights[j] * mv[j, c] for j in range(mk.shape[0])) for c in range(mv.shape[1])]
        rows.append(list(qv[i]) + retrieved)
    return np.asarray(rows)


def _pixels(mask: ObjectMask) -> set[tuple[int, int]]:
    values = mask.values
    return {(i, j) for i in range(mask.height) for j in range(mask.width) if values[i, j] > 0.5}


def brute_force_iou(prediction: ObjectMask, truth: ObjectMask) -> float:
    pred, gt = _pixels(prediction), _pixels(truth)
    union = pred | gt
    if not union:
        return 1.0
    return len(pred & gt) / len(union)


def _boundary(mask: ObjectMask) -> set[tuple[int, int]]:
    inside = _pixels(mask)
    boundary = set()
    for i, j in inside:
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ni, nj = i + di, j + dj
                if 0 <= ni < mask.height and 0 <= nj < mask.width and (ni, nj) not in inside:
                    boundary.add((i, j))
    return boundary


def _matched(source: set, target: set, tolerance: int) -> int:
    return sum(
        1 for (i, j) in source
        if any((i - a) ** 2 + (j - b) ** 2 <= tolerance ** 2 for (a, b) in target)
    )


def brute_force_boundary_f(prediction: ObjectMask, truth: ObjectMask, tolerance_px: int) -> float:
    pred, gt = _boundary(prediction), _boundary(truth)
    if not pred and not gt:
        return 1.0
    if not pred or not gt:
        return 0.0
    precision = _matched(pred, gt, tolerance_px) / len(pred)
    recall = _matched(gt, pred, tolerance_px) / len(gt)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


class OracleCheckReport(BaseModel):
    mask_pairs: int
    reads: int
    max_f_error: float
    max_read_error: float
    j_mismatches: int


def _random_mask(rng: np.random.Generator, height: int, width: int) -> ObjectMask:
    # blocky masks give long boundaries, sparse ones give isolated pixels
    if rng.random() < 0.5:
        return ObjectMask((rng.random((height, width)) < rng.uniform(0.05, 0.95)).astype(np.float64))
    top, left = rng.integers(0, height), rng.integers(0, width)
    bottom, right = rng.integers(top, height + 1), rng.integers(left, width + 1)
    values = np.zeros((height, width))
    values[top:bottom, left:right] = 1.0
    return ObjectMask(values)


def _random_grid(rng: np.random.Generator, height: int, width: int, channels: int) -> FeatureGrid:
    return FeatureGrid(rng.normal(0.0, 1.0, (height, width, channels)))


def run_oracle_checks(mask_pairs: int = 500, reads: int = 200, seed: int = 0,
                      read_tolerance: float = 1e-9, f_tolerance: float = 1e-12) -> OracleCheckReport:
    """Compare J, F and the memory read against the loop references on random instances."""
    rng = np.random.default_rng(seed)
    j_mismatches, max_f_error = 0, 0.0
    for _ in range(mask_pairs):
        height, width = (int(v) for v in rng.integers(1, 33, 2))
        prediction, truth = _random_mask(rng, height, width), _random_mask(rng, height, width)
        tolerance = int(rng.integers(1, 4))
        if mask_iou(prediction, truth) != brute_force_iou(prediction, truth):
            j_mismatches += 1
        f_error = abs(boundary_f(prediction, truth, tolerance) - brute_force_boundary_f(prediction, truth, tolerance))
        max_f_error = max(max_f_error, f_error)

    max_read_error = 0.0
    for _ in range(reads):
        qh, qw, mh, mw = (int(v) for v in rng.integers(1, 9, 4))
        key_channels, value_channels = (int(v) for v in rng.integers(1, 17, 2))
        query_key = _random_grid(rng, qh, qw, key_channels)
        query_value = _random_grid(rng, qh, qw, value_channels)
        memory_key = _random_grid(rng, mh, mw, key_channels)
        memory_value = _random_grid(rng, mh, mw, value_channels)
        combined = memory_read(query_key, query_value, memory_key, memory_value).combined.locations
        reference = brute_force_read(query_key, query_value, memory_key, memory_value)
        error = np.abs(combined - reference) / np.maximum(np.abs(reference), 1.0)
        max_read_error = max(max_read_error, float(error.max()))

    report = OracleCheckReport(mask_pairs=mask_pairs, reads=reads, max_f_error=max_f_error,
                               max_read_error=max_read_error, j_mismatches=j_mismatches)
    if j_mismatches or max_f_error > f_tolerance or max_read_error > read_tolerance:
        raise OracleMismatchError(f"oracle mismatch: {report.model_dump()}")
    return report
