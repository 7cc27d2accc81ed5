"""Space-time memory read and previous-mask prior enhancement."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from vosmem.core import FeatureGrid, ObjectMask, dot_similarity, row_normalize
from vosmem.errors import DegenerateRowError, DimensionError, EmptyMemoryError, ResolutionError
from vosmem.models import NormModeEnum, PriorModeEnum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReadOutput:
    combined: FeatureGrid
    weights: np.ndarray
    query_channels: int

    @property
    def retrieved(self) -> np.ndarray:
        """``(H, W, C_m)`` memory part of ``combined``."""
        return self.combined.data[:, :, self.query_channels:]


def memory_read(query_key: FeatureGrid, query_value: FeatureGrid, memory_key: FeatureGrid,
                memory_value: FeatureGrid, mode: NormModeEnum = NormModeEnum.SOFTMAX,
                scale_by_channels: bool = False, l2_normalize: bool = False,
                fallback_to_softmax: bool = True, multiplicity: Optional[np.ndarray] = None) -> ReadOutput:
    """Read memory for every query location.

    ``multiplicity`` marks memory row j as standing for that many identical
    locations; the result then equals the read over the expanded memory and
    ``weights`` holds the weight of one copy per row.
    """
    if (query_key.height, query_key.width) != (query_value.height, query_value.width):
        raise DimensionError("query key and value must share height and width")
    if memory_key.location_count != memory_value.location_count:
        raise DimensionError(
            f"memory key has {memory_key.location_count} locations, value has {memory_value.location_count}"
        )
    if memory_key.location_count == 0:
        raise EmptyMemoryError("memory holds no locations")
    counts = None
    if multiplicity is not None:
        counts = np.asarray(multiplicity, dtype=np.float64)
        if counts.shape != (memory_key.location_count,) or np.any(counts < 1):
            raise DimensionError(
                f"multiplicity must hold one count >= 1 per memory location, got shape {counts.shape}"
            )

    similarity = dot_similarity(query_key, memory_key, scale_by_channels, l2_normalize)
    try:
        weights = _normalize(similarity, mode, counts)
    except DegenerateRowError as e:
        if not fallback_to_softmax:
            raise
        logger.warning("raw_sum normalization failed (%s); using softmax", e.error_message)
        weights = _normalize(similarity, NormModeEnum.SOFTMAX, counts)

    retrieved = (weights if counts is None else weights * counts) @ memory_value.locations
    combined = np.concatenate([query_value.locations, retrieved], axis=1)
    return ReadOutput(
        combined=FeatureGrid.from_locations(combined, query_key.height, query_key.width),
        weights=weights,
        query_channels=query_value.channels,
    )


def _normalize(similarity: np.ndarray, mode: NormModeEnum, counts: Optional[np.ndarray]) -> np.ndarray:
    if counts is None:
        return row_normalize(similarity, mode)
    if mode == NormModeEnum.RAW_SUM:
        return row_normalize(similarity * counts, mode) / counts
    return row_normalize(similarity + np.log(counts), mode) / counts


def downsample_mask(mask: ObjectMask, target_height: int, target_width: int) -> ObjectMask:
    """Area interpolation: every output cell is the mean of its source block."""
    height, width = mask.shape
    if (target_height < 1 or target_width < 1
            or height % target_height or width % target_width):
        raise ResolutionError(
            f"{height}x{width} mask cannot be block-averaged to {target_height}x{target_width}"
        )
    if (target_height, target_width) == (height, width):
        return mask
    block_h, block_w = height // target_height, width // target_width
    blocks = mask.values.reshape(target_height, block_h, target_width, block_w)
    return ObjectMask(np.clip(blocks.mean(axis=(1, 3)), 0.0, 1.0))


@dataclass(frozen=True)
class PriorGate:
    """Seeded stand-in for the prior convolution: one affine output over
    (C feature channels + 1 mask channel) followed by a sigmoid."""

    mode: PriorModeEnum
    weights: np.ndarray
    bias: float
    beta: float = 5.0
    seed: int = 0

    @classmethod
    def from_seed(cls, mode: PriorModeEnum, channels: int, seed: int = 0, feature_std: float = 0.01,
                  mask_weight: float = 2.0, bias: float = 1.0, beta: float = 5.0) -> "PriorGate":
        feature_weights = np.random.default_rng(seed).normal(0.0, feature_std, channels)
        weights = np.append(feature_weights, mask_weight)
        weights.setflags(write=False)
        return cls(mode=mode, weights=weights, bias=bias, beta=beta, seed=seed)

    @property
    def channels(self) -> int:
        return self.weights.size - 1


def gate_map(features: np.ndarray, mask_cells: np.ndarray, gate: PriorGate) -> np.ndarray:
    """``(H', W')`` gate values in (0, 1)."""
    logits = features @ gate.weights[:-1] + mask_cells * gate.weights[-1] + gate.bias
    return expit(logits)


def prior_enhance(query_feature: FeatureGrid, previous_mask: ObjectMask, gate: PriorGate) -> FeatureGrid:
    if gate.mode == PriorModeEnum.OFF:
        return query_feature
    if gate.channels != query_feature.channels:
        raise DimensionError(f"gate expects {gate.channels} channels, feature has {query_feature.channels}")
    cells = downsample_mask(previous_mask, query_feature.height, query_feature.width).values
    features = query_feature.data

    if gate.mode == PriorModeEnum.STRONG:
        mass = cells.sum()
        if mass > 0:
            prototype = np.tensordot(cells, features, axes=([0, 1], [0, 1])) / mass
            features = features + gate.beta * cells[:, :, None] * prototype

    gate_values = gate_map(features, cells, gate)
    return FeatureGrid(gate_values[:, :, None] * features)
