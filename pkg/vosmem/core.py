"""Dense grid containers and the numeric primitives the engine is built on.

Layout convention: every grid is stored as an ``(H, W, C)`` array and flattened
row-major, so location ``i * W + j`` is row ``i``, column ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from vosmem.errors import DegenerateRowError, DimensionError, ResolutionError
from vosmem.models import NormModeEnum

BINARIZE_THRESHOLD = 0.5


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FeatureGrid:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise DimensionError(f"feature grid needs shape (H, W, C) with positive sizes, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DimensionError("feature grid contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_flat(cls, values: Sequence[float], height: int, width: int, channels: int) -> "FeatureGrid":
        values = np.asarray(values, dtype=np.float64)
        if values.size != height * width * channels:
            raise DimensionError(
                f"expected {height * width * channels} values for {height}x{width}x{channels}, got {values.size}"
            )
        return cls(values.reshape(height, width, channels))

    @classmethod
    def from_locations(cls, locations: np.ndarray, height: int, width: int) -> "FeatureGrid":
        return cls(np.asarray(locations).reshape(height, width, -1))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def location_count(self) -> int:
        return self.height * self.width

    @property
    def locations(self) -> np.ndarray:
        """``(H*W, C)`` read-only view, row-major."""
        return self.data.reshape(self.location_count, self.channels)

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def scaled(self, factor: float) -> "FeatureGrid":
        return FeatureGrid(self.data * factor)

    @staticmethod
    def stack_locations(grids: Sequence["FeatureGrid"]) -> "FeatureGrid":
        """Concatenate along the location axis; entry order is location order."""
        if not grids:
            raise DimensionError("nothing to stack")
        width, channels = grids[0].width, grids[0].channels
        for grid in grids:
            if grid.width != width or grid.channels != channels:
                raise DimensionError("stacked grids must share width and channel count")
        return FeatureGrid(np.concatenate([grid.data for grid in grids], axis=0))


@dataclass(frozen=True)
class ObjectMask:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ResolutionError(f"mask needs shape (H, W) with positive sizes, got {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ResolutionError("mask values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def empty(cls, height: int, width: int) -> "ObjectMask":
        return cls(np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def as_bool(self) -> np.ndarray:
        return self.values > BINARIZE_THRESHOLD

    def binarize(self) -> "ObjectMask":
        return ObjectMask(self.as_bool().astype(np.float64))

    @property
    def area(self) -> int:
        return int(self.as_bool().sum())

    def is_empty(self) -> bool:
        return self.area == 0


@dataclass(frozen=True)
class LabeledMaskSet:
    masks: tuple[ObjectMask, ...]

    def __post_init__(self):
        masks = tuple(self.masks)
        if not masks:
            raise DimensionError("a labeled mask set needs at least one object")
        shape = masks[0].shape
        if any(mask.shape != shape for mask in masks):
            raise ResolutionError("all object masks must share one resolution")
        object.__setattr__(self, "masks", masks)

    @classmethod
    def from_label_map(cls, label_map: np.ndarray, object_count: int) -> "LabeledMaskSet":
        """Label 0 is background, labels 1..N are objects."""
        label_map = np.asarray(label_map)
        return cls(tuple(ObjectMask((label_map == k).astype(np.float64)) for k in range(1, object_count + 1)))

    @property
    def object_count(self) -> int:
        return len(self.masks)

    @property
    def shape(self) -> tuple[int, int]:
        return self.masks[0].shape

    def stacked(self) -> np.ndarray:
        return np.stack([mask.values for mask in self.masks])

    def to_label_map(self) -> np.ndarray:
        """Hard assignment: background plus one channel per object, ties to the lowest index."""
        objects = self.stacked()
        background = np.clip(1.0 - objects.sum(axis=0), 0.0, 1.0)
        return np.argmax(np.concatenate([background[None], objects]), axis=0)

    def hard_assign(self) -> "LabeledMaskSet":
        return LabeledMaskSet.from_label_map(self.to_label_map(), self.object_count)

    def union(self) -> ObjectMask:
        return ObjectMask(np.clip(self.stacked().sum(axis=0), 0.0, 1.0))


def dot_similarity(query_key: FeatureGrid, memory_key: FeatureGrid,
                   scale_by_channels: bool = False, l2_normalize: bool = False) -> np.ndarray:
    """Inner products between every query location (rows) and memory location (cols)."""
    if query_key.channels != memory_key.channels:
        raise DimensionError(
            f"query key has {query_key.channels} channels, memory key has {memory_key.channels}"
        )
    query, memory = query_key.locations, memory_key.locations
    if l2_normalize:
        query = query / np.maximum(np.linalg.norm(query, axis=1, keepdims=True), 1e-12)
        memory = memory / np.maximum(np.linalg.norm(memory, axis=1, keepdims=True), 1e-12)
    similarity = query @ memory.T
    if scale_by_channels:
        similarity = similarity / np.sqrt(query_key.channels)
    return similarity


def row_normalize(similarity: np.ndarray, mode: NormModeEnum = NormModeEnum.SOFTMAX) -> np.ndarray:
    similarity = np.asarray(similarity, dtype=np.float64)
    if similarity.ndim != 2 or similarity.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {similarity.shape}")
    if mode == NormModeEnum.RAW_SUM:
        sums = similarity.sum(axis=1, keepdims=True)
        if np.any(sums <= 0.0):
            bad = int(np.argmax(sums[:, 0] <= 0.0))
            raise DegenerateRowError(f"row {bad} has non-positive sum {float(sums[bad, 0])!r}")
        return similarity / sums
    weights = similarity - similarity.max(axis=1, keepdims=True)
    np.exp(weights, out=weights)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights
