"""Deterministic synthetic videos: parametric movers over a flat background.

Frames are rendered lazily, each one a pure function of (spec, t), so a
2,000-frame video never sits in memory at once.
"""
from __future__ import annotations

import logging
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from vosmem.core import LabeledMaskSet
from vosmem.errors import SpecError
from vosmem.models import ScenarioEnum, ShapeEnum, enum_comment

logger = logging.getLogger(__name__)

Color = tuple[float, float, float]

BACKGROUND: Color = (0.1, 0.1, 0.1)
PRESET_SIZE = (64, 64)


class Waypoint(BaseModel):
    frame: int = Field(ge=0)
    row: float
    col: float


class ColorKey(BaseModel):
    frame: int = Field(ge=0)
    color: Color


class MoverSpec(BaseModel):
    shape: ShapeEnum = Field(default=ShapeEnum.RECTANGLE, description=enum_comment(ShapeEnum))
    radius: float = Field(default=8.0, gt=0, description="disc radius in pixels")
    extent: tuple[float, float] = Field(default=(16.0, 16.0), description="rectangle height, width")
    color: Color = (0.9, 0.3, 0.2)
    colors: list[ColorKey] = Field(default_factory=list, description="color keyframes, linear in between")
    waypoints: list[Waypoint]
    occlusions: list[tuple[int, int]] = Field(default_factory=list, description="hidden for [start, end)")

    @model_validator(mode="after")
    def _ordered(self):
        if not self.waypoints:
            raise ValueError("a mover needs at least one waypoint")
        frames = [w.frame for w in self.waypoints]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("waypoint frames must be strictly increasing")
        key_frames = [k.frame for k in self.colors]
        if any(b <= a for a, b in zip(key_frames, key_frames[1:])):
            raise ValueError("color keyframes must be strictly increasing")
        return self

    def position(self, t: int) -> tuple[float, float]:
        frames = [w.frame for w in self.waypoints]
        return (float(np.interp(t, frames, [w.row for w in self.waypoints])),
                float(np.interp(t, frames, [w.col for w in self.waypoints])))

    def color_at(self, t: int) -> np.ndarray:
        if not self.colors:
            return np.asarray(self.color, dtype=np.float64)
        frames = [k.frame for k in self.colors]
        channels = np.asarray([k.color for k in self.colors], dtype=np.float64)
        return np.array([np.interp(t, frames, channels[:, c]) for c in range(3)])

    def visible(self, t: int) -> bool:
        return not any(start <= t < end for start, end in self.occlusions)

    def footprint(self, t: int, height: int, width: int) -> np.ndarray:
        """Boolean mask of pixels whose centers fall inside the shape."""
        row, col = self.position(t)
        rows = np.arange(height)[:, None] + 0.5
        cols = np.arange(width)[None, :] + 0.5
        if self.shape == ShapeEnum.DISC:
            return (rows - row) ** 2 + (cols - col) ** 2 <= self.radius ** 2
        half_h, half_w = self.extent[0] / 2, self.extent[1] / 2
        return ((rows >= row - half_h) & (rows < row + half_h)
                & (cols >= col - half_w) & (cols < col + half_w))


class VideoSpec(BaseModel):
    frame_count: int = Field(ge=2)
    height: int = Field(default=64, ge=1)
    width: int = Field(default=64, ge=1)
    background: Color = BACKGROUND
    objects: list[MoverSpec] = Field(min_length=1)
    distractors: list[MoverSpec] = Field(default_factory=list)
    pixel_noise: float = Field(default=0.0, ge=0.0)
    seed: int = 0


class SyntheticVideo:
    """Rendered view of a :class:`VideoSpec`; ``frame(t)`` is deterministic."""

    def __init__(self, spec: VideoSpec):
        self.spec = spec

    @property
    def frame_count(self) -> int:
        return self.spec.frame_count

    @property
    def object_count(self) -> int:
        return len(self.spec.objects)

    @property
    def shape(self) -> tuple[int, int]:
        return self.spec.height, self.spec.width

    def frame(self, t: int) -> tuple[np.ndarray, LabeledMaskSet]:
        """``(H, W, 3)`` image in [0, 1] and the ground-truth masks of frame ``t``."""
        if not 0 <= t < self.frame_count:
            raise SpecError(f"frame {t} outside [0, {self.frame_count})")
        height, width = self.shape
        image = np.empty((height, width, 3))
        image[:] = self.spec.background
        label_map = np.zeros((height, width), dtype=np.int64)

        # distractors first so targets occlude them
        for mover in self.spec.distractors:
            if mover.visible(t):
                image[mover.footprint(t, height, width)] = mover.color_at(t)
        for label, mover in enumerate(self.spec.objects, start=1):
            if mover.visible(t):
                inside = mover.footprint(t, height, width)
                image[inside] = mover.color_at(t)
                label_map[inside] = label

        if self.spec.pixel_noise > 0:
            rng = np.random.default_rng([self.spec.seed, t])
            image = np.clip(image + rng.normal(0.0, self.spec.pixel_noise, image.shape), 0.0, 1.0)
        return image, LabeledMaskSet.from_label_map(label_map, self.object_count)

    def __iter__(self) -> Iterator[tuple[np.ndarray, LabeledMaskSet]]:
        for t in range(self.frame_count):
            yield self.frame(t)


def generate_video(spec: VideoSpec) -> SyntheticVideo:
    for mover in [*spec.objects, *spec.distractors]:
        for waypoint in mover.waypoints:
            if not (0 <= waypoint.row <= spec.height and 0 <= waypoint.col <= spec.width):
                raise SpecError(
                    f"waypoint ({waypoint.row}, {waypoint.col}) at frame {waypoint.frame} "
                    f"lies outside the {spec.height}x{spec.width} frame"
                )
        for start, end in mover.occlusions:
            if end < start:
                raise SpecError(f"occlusion window [{start}, {end}) is reversed")
    return SyntheticVideo(spec)


def _wander(rng: np.random.Generator, start: int, end: int, size: tuple[int, int], margin: float,
            leg: int, origin: Optional[tuple[float, float]] = None) -> list[Waypoint]:
    """Random piecewise-linear walk over frames [start, end] with one leg every ``leg`` frames."""
    height, width = size
    frames = list(range(start, end, leg)) + [end]
    points = []
    for i, frame in enumerate(frames):
        if i == 0 and origin is not None:
            row, col = origin
        else:
            row = float(rng.uniform(margin, height - margin))
            col = float(rng.uniform(margin, width - margin))
        points.append(Waypoint(frame=frame, row=row, col=col))
    return points


def static_scene(frame_count: int, seed: int = 0) -> VideoSpec:
    """One stationary grid-aligned rectangle; segmentation is exact."""
    target = MoverSpec(
        shape=ShapeEnum.RECTANGLE, extent=(16, 16), color=(0.9, 0.3, 0.2),
        waypoints=[Waypoint(frame=0, row=32, col=32)],
    )
    return VideoSpec(frame_count=frame_count, objects=[target], seed=seed)


def two_object_scene(frame_count: int, seed: int = 0) -> VideoSpec:
    rng = np.random.default_rng(seed)
    last = frame_count - 1
    rectangle = MoverSpec(
        shape=ShapeEnum.RECTANGLE, extent=(24, 24), color=(0.9, 0.25, 0.2),
        waypoints=_wander(rng, 0, last, PRESET_SIZE, 14, 60),
    )
    disc = MoverSpec(
        shape=ShapeEnum.DISC, radius=12, color=(0.2, 0.45, 0.95),
        waypoints=_wander(rng, 0, last, PRESET_SIZE, 14, 60),
    )
    return VideoSpec(frame_count=frame_count, objects=[rectangle, disc], seed=seed)


def corruption_scene(frame_count: int, seed: int = 0) -> VideoSpec:
    """One slowly wandering target; paired with a corruption schedule in the scorer config."""
    rng = np.random.default_rng(seed)
    target = MoverSpec(
        shape=ShapeEnum.RECTANGLE, extent=(20, 20), color=(0.9, 0.3, 0.2),
        waypoints=_wander(rng, 0, frame_count - 1, PRESET_SIZE, 14, 50),
    )
    return VideoSpec(frame_count=frame_count, objects=[target], seed=seed)


def distractor_scene(frame_count: int, seed: int = 0) -> VideoSpec:
    """A target among wandering background objects of near-identical color."""
    rng = np.random.default_rng(seed)
    last = frame_count - 1
    target_color = (0.85, 0.3, 0.25)
    target = MoverSpec(
        shape=ShapeEnum.RECTANGLE, extent=(20, 20), color=target_color,
        waypoints=_wander(rng, 0, last, PRESET_SIZE, 12, 40),
    )
    distractors = []
    for _ in range(3):
        offset = rng.uniform(-0.05, 0.05, 3)
        color = tuple(float(c) for c in np.clip(np.asarray(target_color) + offset, 0.0, 1.0))
        distractors.append(MoverSpec(
            shape=ShapeEnum.DISC, radius=6, color=color,
            waypoints=_wander(rng, 0, last, PRESET_SIZE, 8, 30),
        ))
    return VideoSpec(frame_count=frame_count, objects=[target], distractors=distractors, seed=seed)


# scene-revisit palette: the target drifts from REVISIT_START to REVISIT_A while
# stationary, turns REVISIT_B and wanders, then returns home looking like REVISIT_A.
REVISIT_START: Color = (0.95, 0.35, 0.2)
REVISIT_A: Color = (0.27, 0.27, 0.65)
REVISIT_B: Color = (0.95, 0.95, 0.1)
REVISIT_HOME = (32.0, 32.0)


def scene_revisit(frame_count: int, seed: int = 0) -> VideoSpec:
    """Appearance A for [0, L/3), B for [L/3, 2L/3), back to A afterwards.

    A's color drifts during its phase, so the annotated frame alone no longer
    describes the object when A returns; only frames kept from late in the
    first phase do.
    """
    if frame_count < 9:
        raise SpecError("scene_revisit needs at least 9 frames")
    rng = np.random.default_rng(seed)
    first, second, last = frame_count // 3, 2 * frame_count // 3, frame_count - 1
    home_row, home_col = REVISIT_HOME
    waypoints = [Waypoint(frame=0, row=home_row, col=home_col)]
    leg = max(2, min(60, (second - first) // 4))
    waypoints += _wander(rng, first - 1, second - 1, PRESET_SIZE, 14, leg, origin=REVISIT_HOME)
    waypoints += [Waypoint(frame=second, row=home_row, col=home_col),
                  Waypoint(frame=last, row=home_row, col=home_col)]
    colors = [
        ColorKey(frame=0, color=REVISIT_START),
        ColorKey(frame=first - 1, color=REVISIT_A),
        ColorKey(frame=first, color=REVISIT_B),
        ColorKey(frame=second - 1, color=REVISIT_B),
        ColorKey(frame=second, color=REVISIT_A),
    ]
    target = MoverSpec(shape=ShapeEnum.RECTANGLE, extent=(24, 24), colors=colors, waypoints=waypoints)
    return VideoSpec(frame_count=frame_count, objects=[target], seed=seed)


SCENARIOS = {
    ScenarioEnum.STATIC: static_scene,
    ScenarioEnum.TWO_OBJECTS: two_object_scene,
    ScenarioEnum.CORRUPTION: corruption_scene,
    ScenarioEnum.DISTRACTORS: distractor_scene,
    ScenarioEnum.SCENE_REVISIT: scene_revisit,
}


def scenario_spec(scenario: ScenarioEnum, frame_count: int, seed: int = 0) -> VideoSpec:
    try:
        builder = SCENARIOS[ScenarioEnum(scenario)]
    except (KeyError, ValueError):
        raise SpecError(f"unknown scenario {scenario!r}")
    return builder(frame_count, seed)
