"""Declarative run configuration: a YAML file validated by pydantic models.

A run manifest (``manifest.json``) written by a previous command is accepted
in place of the YAML file; its resolved config is replayed as-is.
"""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from vosmem.descriptor import DescriptorEncoder
from vosmem.errors import ConfigError
from vosmem.membank import BankPolicy
from vosmem.models import NormModeEnum, PriorModeEnum, ScenarioEnum, enum_comment
from vosmem.video import BACKGROUND, PRESET_SIZE, Color, MoverSpec, VideoSpec, scenario_spec

logger = logging.getLogger(__name__)

CORRUPTION_SALT = 0xC0


class VideoConfig(BaseModel):
    scenario: Optional[ScenarioEnum] = Field(default=ScenarioEnum.TWO_OBJECTS,
                                             description=enum_comment(ScenarioEnum))
    frame_count: int = Field(default=120, ge=2)
    height: int = Field(default=64, ge=1)
    width: int = Field(default=64, ge=1)
    background: Color = BACKGROUND
    objects: list[MoverSpec] = Field(default_factory=list, description="explicit movers; overrides the scenario")
    distractors: list[MoverSpec] = Field(default_factory=list)
    pixel_noise: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _has_source(self):
        if self.scenario is None and not self.objects:
            raise ValueError("either a scenario or an explicit object list is required")
        return self

    @property
    def frame_size(self) -> tuple[int, int]:
        return (self.height, self.width) if self.objects else PRESET_SIZE

    def to_spec(self, seed: int) -> VideoSpec:
        """Scenario presets render at 64x64; explicit movers use the configured size."""
        if self.objects:
            return VideoSpec(
                frame_count=self.frame_count, height=self.height, width=self.width,
                background=self.background, objects=self.objects, distractors=self.distractors,
                pixel_noise=self.pixel_noise, seed=seed,
            )
        return scenario_spec(self.scenario, self.frame_count, seed)


class ReadoutConfig(BaseModel):
    mode: NormModeEnum = Field(default=NormModeEnum.SOFTMAX, description=enum_comment(NormModeEnum))
    scale_by_channels: bool = False
    l2_normalize: bool = False
    fallback_to_softmax: bool = True
    merge_duplicate_keys: bool = Field(
        default=True, description="read identical memory keys once, weighted by their count"
    )


class GateConfig(BaseModel):
    mode: PriorModeEnum = Field(default=PriorModeEnum.WEAK, description=enum_comment(PriorModeEnum))
    seed: int = 0
    feature_std: float = Field(default=0.01, ge=0.0)
    mask_weight: float = 2.0
    bias: float = 1.0
    beta: float = Field(default=5.0, ge=0.0, description="strong-prior shift strength")
    prior_dilate_px: int = Field(default=0, ge=0, description="dilate the previous mask before use")


class CorruptionConfig(BaseModel):
    frames: list[int] = Field(default_factory=list, description="explicit frames to corrupt")
    period: Optional[int] = Field(default=None, ge=1)
    phase: int = Field(default=0, ge=0)
    rate: float = Field(default=1.0, ge=0.0, le=1.0, description="chance a scheduled frame is corrupted")
    shift_px: int = Field(default=16, ge=0)
    dilate_px: int = Field(default=2, ge=0)

    def scheduled(self, t: int) -> bool:
        if t < 1:
            return False
        periodic = self.period is not None and t % self.period == self.phase % self.period
        return periodic or t in self.frames

    def applies(self, t: int, seed: int) -> bool:
        if not self.scheduled(t):
            return False
        if self.rate >= 1.0:
            return True
        return bool(np.random.default_rng([seed, t, CORRUPTION_SALT]).random() < self.rate)


class ScorerConfig(BaseModel):
    noise_sigma: float = Field(default=0.0, ge=0.0)
    corruption: CorruptionConfig = Field(default_factory=CorruptionConfig)


class RunConfig(BaseModel):
    video: VideoConfig = Field(default_factory=VideoConfig)
    policy: BankPolicy = Field(default_factory=BankPolicy)
    readout: ReadoutConfig = Field(default_factory=ReadoutConfig)
    encoder: DescriptorEncoder = Field(default_factory=DescriptorEncoder)
    gate: GateConfig = Field(default_factory=GateConfig)
    scorer: ScorerConfig = Field(default_factory=ScorerConfig)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, seeds: list[int]) -> list[int]:
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds must be distinct, got {seeds}")
        return seeds

    @model_validator(mode="after")
    def _stride_divides_frames(self):
        height, width = self.video.frame_size
        stride = self.encoder.stride
        if height % stride or width % stride:
            raise ValueError(f"encoder.stride {stride} does not divide the {height}x{width} frames")
        return self

    def with_updates(self, section: str, **values: Any) -> "RunConfig":
        """Copy with fields of one section replaced, re-validated."""
        data = self.model_dump(mode="json")
        data[section].update(values)
        return validate_config(data, source=f"{section} override")


def _format_validation(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in e.errors()
    )


def validate_config(data: Any, source: str = "<config>") -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping, got {type(data).__name__}")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation(e)}") from e


def read_manifest(path: Path) -> dict:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"{path}: cannot read manifest: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(manifest, dict) or "config" not in manifest:
        raise ConfigError(f"{path}: manifest has no 'config' section")
    return manifest


def load_config(path: Path) -> RunConfig:
    path = Path(path)
    if path.suffix == ".json":
        return validate_config(read_manifest(path)["config"], source=str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: {getattr(e, 'problem', None) or e}") from e
    config = validate_config(data, source=str(path))
    logger.debug("loaded %s (digest %s)", path, config_digest(config)[:12])
    return config


def canonical_json(config: RunConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_digest(config: RunConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()
