"""Hand-built frame encoder and label decoder standing in for the trained
key/value encoders and the mask decoder.

Key channels: block-mean color times ``color_gain``, the normalized cell
position times ``position_gain``, and one completion channel that gives every
key the same norm. With equal norms the dot product is a shifted negative
squared distance, so softmax rows favour the nearest memory keys.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vosmem.core import FeatureGrid, LabeledMaskSet
from vosmem.errors import DecodeError, DimensionError, ResolutionError
from vosmem.readout import ReadOutput

logger = logging.getLogger(__name__)

COLOR_CHANNELS = 3


@dataclass(frozen=True)
class FrameDescriptor:
    key: FeatureGrid
    value: FeatureGrid
    object_count: int = 0

    @property
    def label_channels(self) -> Optional[np.ndarray]:
        """``(H', W', N+1)`` occupancy, background first; None for query descriptors."""
        if self.value.channels == COLOR_CHANNELS:
            return None
        return self.value.data[:, :, COLOR_CHANNELS:]


def block_mean(array: np.ndarray, stride: int) -> np.ndarray:
    """Mean over non-overlapping ``stride x stride`` blocks of an ``(H, W, ...)`` array."""
    height, width = array.shape[:2]
    if stride < 1 or height % stride or width % stride:
        raise ResolutionError(f"stride {stride} does not divide the {height}x{width} frame")
    blocks = array.reshape(height // stride, stride, width // stride, stride, *array.shape[2:])
    return blocks.mean(axis=(1, 3))


def position_ramp(height: int, width: int) -> np.ndarray:
    rows = (np.arange(height) + 0.5) / height
    cols = (np.arange(width) + 0.5) / width
    return np.stack(np.meshgrid(rows, cols, indexing="ij"), axis=2)


def label_distribution(labels: LabeledMaskSet) -> np.ndarray:
    """``(H, W, N+1)`` per-pixel distribution over background and objects."""
    objects = np.moveaxis(labels.stacked(), 0, 2)
    background = np.clip(1.0 - objects.sum(axis=2, keepdims=True), 0.0, 1.0)
    distribution = np.concatenate([background, objects], axis=2)
    return distribution / distribution.sum(axis=2, keepdims=True)


class DescriptorEncoder(BaseModel):
    model_config = ConfigDict(frozen=True)

    stride: int = Field(default=4, ge=1)
    color_gain: float = Field(default=12.0, gt=0)
    position_gain: float = Field(default=4.0, ge=0)
    norm_completion: bool = True

    @property
    def key_radius(self) -> float:
        """Squared norm shared by every completed key."""
        return COLOR_CHANNELS * self.color_gain ** 2 + 2 * self.position_gain ** 2

    def encode_key(self, colors: np.ndarray) -> FeatureGrid:
        height, width = colors.shape[:2]
        parts = [colors * self.color_gain, position_ramp(height, width) * self.position_gain]
        key = np.concatenate(parts, axis=2)
        if self.norm_completion:
            slack = np.maximum(self.key_radius - np.sum(key ** 2, axis=2, keepdims=True), 0.0)
            key = np.concatenate([key, np.sqrt(slack)], axis=2)
        return FeatureGrid(key)

    def encode(self, frame: np.ndarray, labels: Optional[LabeledMaskSet] = None) -> FrameDescriptor:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 3 or frame.shape[2] != COLOR_CHANNELS:
            raise DimensionError(f"frame must be (H, W, 3), got {frame.shape}")
        colors = block_mean(frame, self.stride)
        key = self.encode_key(colors)
        if labels is None:
            return FrameDescriptor(key=key, value=FeatureGrid(colors))
        if labels.shape != frame.shape[:2]:
            raise ResolutionError(f"labels are {labels.shape}, frame is {frame.shape[:2]}")
        occupancy = block_mean(label_distribution(labels), self.stride)
        return FrameDescriptor(
            key=key,
            value=FeatureGrid(np.concatenate([colors, occupancy], axis=2)),
            object_count=labels.object_count,
        )


def extract_descriptor(frame: np.ndarray, labels: Optional[LabeledMaskSet] = None, stride: int = 4,
                       encoder: Optional[DescriptorEncoder] = None) -> FrameDescriptor:
    """Memory descriptor when ``labels`` are given, query descriptor (color-only value) otherwise."""
    encoder = encoder or DescriptorEncoder(stride=stride)
    return encoder.encode(frame, labels)


def retrieved_labels(read_output: ReadOutput, object_count: int) -> np.ndarray:
    """``(H', W', N+1)`` soft label distribution carried by the retrieved memory values."""
    retrieved = read_output.retrieved
    expected = COLOR_CHANNELS + object_count + 1
    if object_count < 1 or retrieved.shape[2] != expected:
        raise DecodeError(
            f"retrieved values have {retrieved.shape[2]} channels, expected {expected} "
            f"for {object_count} object(s)"
        )
    return retrieved[:, :, COLOR_CHANNELS:]


def decode_labels(read_output: ReadOutput, object_count: int, stride: int = 4) -> LabeledMaskSet:
    if stride < 1:
        raise ResolutionError(f"stride must be positive, got {stride}")
    soft = retrieved_labels(read_output, object_count)
    # argmax keeps the first maximum, so ties fall to background
    cells = np.argmax(soft, axis=2)
    label_map = np.repeat(np.repeat(cells, stride, axis=0), stride, axis=1)
    return LabeledMaskSet.from_label_map(label_map, object_count)
