"""Episode loop plus the sweep and benchmark procedures built on it."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from scipy.ndimage import binary_dilation, grey_dilation, shift

from vosmem.config import RunConfig
from vosmem.core import LabeledMaskSet, ObjectMask
from vosmem.descriptor import FrameDescriptor, decode_labels
from vosmem.errors import ConfigError, EpisodeError, SpecError, UsageError, VosMemError
from vosmem.membank import MemoryBank
from vosmem.metrics import EvalResult, FrameRecord, boundary_f, default_tolerance, disc_footprint
from vosmem.models import AdmissionEnum, EvictionModeEnum, SweepAxisEnum
from vosmem.quality import OracleScorer, QualityScorer, QualityTracker, mask_iou
from vosmem.readout import PriorGate, memory_read, prior_enhance
from vosmem.video import SyntheticVideo, generate_video

logger = logging.getLogger(__name__)

BENCH_BUCKET = 100
MIN_BENCH_FRAMES = 100


def corrupt_prediction(prediction: LabeledMaskSet, shift_px: int, dilate_px: int) -> LabeledMaskSet:
    """Translate the label map horizontally toward the frame center, then dilate it."""
    label_map = prediction.to_label_map()
    columns = np.nonzero(label_map)[1]
    direction = 1 if columns.size == 0 or columns.mean() < label_map.shape[1] / 2 else -1
    moved = shift(label_map, (0, direction * shift_px), order=0, mode="constant", cval=0)
    if dilate_px > 0:
        moved = grey_dilation(moved, footprint=disc_footprint(dilate_px))
    return LabeledMaskSet.from_label_map(moved, prediction.object_count)


def prior_mask(previous: LabeledMaskSet, dilate_px: int = 0) -> ObjectMask:
    union = previous.union()
    if dilate_px <= 0:
        return union
    return ObjectMask(binary_dilation(union.as_bool(), structure=disc_footprint(dilate_px)).astype(np.float64))


def frame_metrics(prediction: LabeledMaskSet, truth: LabeledMaskSet) -> tuple[float, float]:
    """Mean J and mean F over objects."""
    tolerance = default_tolerance(*truth.shape)
    js = [mask_iou(p, g) for p, g in zip(prediction.masks, truth.masks)]
    fs = [boundary_f(p, g, tolerance) for p, g in zip(prediction.masks, truth.masks)]
    return float(np.mean(js)), float(np.mean(fs))


class Episode:
    """One video through one bank. Frames must be fed in order."""

    def __init__(self, video: SyntheticVideo, config: RunConfig, seed: int = 0,
                 scorer: Optional[QualityScorer] = None):
        self.video = video
        self.config = config
        self.seed = seed
        self.bank = MemoryBank(config.policy)
        self.tracker = QualityTracker()
        self.scorer = scorer or OracleScorer(config.scorer.noise_sigma, seed)
        self.gate: Optional[PriorGate] = None
        self.previous: Optional[LabeledMaskSet] = None
        self.records: list[FrameRecord] = []

    def _record(self, t: int, prediction: LabeledMaskSet, truth: LabeledMaskSet, decision: AdmissionEnum,
                evicted: Optional[int], report, corrupted: bool, elapsed: float) -> None:
        j, f = frame_metrics(prediction, truth)
        self.records.append(FrameRecord(
            frame=t, j=j, f=f, jf=(j + f) / 2, bank_size=len(self.bank), decision=decision.value,
            evicted_frame=evicted, quality=report.normalized_score, predicted_score=report.frame_score,
            true_iou=j, corrupted=corrupted, wall_time_s=elapsed,
        ))

    def start(self) -> None:
        image, truth = self.video.frame(0)
        started = time.perf_counter()
        descriptor = self.config.encoder.encode(image, truth)
        report = self.tracker.report(self.scorer.score(0, image, truth, truth), 0)
        result = self.bank.consider_admission(report, descriptor.key, descriptor.value, 0)
        elapsed = time.perf_counter() - started
        gate = self.config.gate
        self.gate = PriorGate.from_seed(
            gate.mode, descriptor.key.channels, seed=gate.seed, feature_std=gate.feature_std,
            mask_weight=gate.mask_weight, bias=gate.bias, beta=gate.beta,
        )
        self.previous = truth
        self._record(0, truth, truth, result.decision, None, report, False, elapsed)

    def step(self, t: int) -> FrameRecord:
        image, truth = self.video.frame(t)
        config = self.config
        started = time.perf_counter()
        query: FrameDescriptor = config.encoder.encode(image)
        enhanced = prior_enhance(query.key, prior_mask(self.previous, config.gate.prior_dilate_px), self.gate)
        if config.readout.merge_duplicate_keys:
            merged = self.bank.merged_snapshot()
            memory_key, memory_value, multiplicity = merged.key, merged.value, merged.multiplicity
        else:
            memory_key, memory_value = self.bank.snapshot_keys_values()
            multiplicity = None
        read = memory_read(
            enhanced, query.value, memory_key, memory_value, mode=config.readout.mode,
            scale_by_channels=config.readout.scale_by_channels, l2_normalize=config.readout.l2_normalize,
            fallback_to_softmax=config.readout.fallback_to_softmax, multiplicity=multiplicity,
        )
        prediction = decode_labels(read, self.video.object_count, config.encoder.stride)
        corruption = config.scorer.corruption
        corrupted = corruption.applies(t, self.seed)
        if corrupted:
            prediction = corrupt_prediction(prediction, corruption.shift_px, corruption.dilate_px)
        report = self.tracker.report(self.scorer.score(t, image, prediction, truth), t)
        stored = config.encoder.encode(image, prediction)
        result = self.bank.consider_admission(report, stored.key, stored.value, t)
        elapsed = time.perf_counter() - started

        self.previous = prediction
        evicted = result.evicted.frame_index if result.evicted is not None else None
        self._record(t, prediction, truth, result.decision, evicted, report, corrupted, elapsed)
        return self.records[-1]

    def result(self) -> EvalResult:
        return EvalResult(frames=list(self.records), anchor_flagged=self.tracker.flagged)


def run_episode(video: SyntheticVideo, config: RunConfig, seed: int = 0,
                scorer: Optional[QualityScorer] = None) -> EvalResult:
    episode = Episode(video, config, seed, scorer)
    t = 0
    try:
        episode.start()
        for t in range(1, video.frame_count):
            episode.step(t)
    except VosMemError as e:
        raise EpisodeError(t, e.error_message) from e
    result = episode.result()
    logger.info("episode seed=%d frames=%d J=%.4f F=%.4f J&F=%.4f bank=%d",
                seed, video.frame_count, result.mean_j, result.mean_f, result.mean_jf, len(episode.bank))
    return result


def run_seed(config: RunConfig, seed: int) -> EvalResult:
    return run_episode(generate_video(config.video.to_spec(seed)), config, seed)


def _run_all(jobs: list[tuple[RunConfig, int]], workers: int) -> list[EvalResult]:
    if workers <= 1 or len(jobs) <= 1:
        return [run_seed(config, seed) for config, seed in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(run_seed, config, seed) for config, seed in jobs]
        # collected in submission order
        return [future.result() for future in futures]


def run_seeds(config: RunConfig, seeds: Optional[Sequence[int]] = None,
              workers: Optional[int] = None) -> list[EvalResult]:
    seeds = list(seeds if seeds is not None else config.seeds)
    if not seeds:
        raise UsageError("at least one seed is required")
    return _run_all([(config, seed) for seed in seeds], workers or config.workers)


def run_variants(configs: Sequence[RunConfig], seeds: Sequence[int],
                 workers: Optional[int] = None) -> list[list[EvalResult]]:
    """Every config over the same seeds, sharing one worker pool; one result list per config."""
    configs, seeds = list(configs), list(seeds)
    if not configs or not seeds:
        raise UsageError("at least one config and one seed are required")
    jobs = [(config, seed) for config in configs for seed in seeds]
    results = _run_all(jobs, workers or configs[0].workers)
    return [results[index * len(seeds):(index + 1) * len(seeds)] for index in range(len(configs))]


class SweepRow(BaseModel):
    axis: str
    value: str
    seeds: int
    mean_j: float
    mean_f: float
    mean_jf: float
    std_jf: float
    mean_occupancy: float


def value_label(value: Union[int, float, str]) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def apply_axis(config: RunConfig, axis: SweepAxisEnum, value: Union[int, float, str]) -> RunConfig:
    try:
        if axis == SweepAxisEnum.THRESHOLD:
            return config.with_updates("policy", sigma=float(value))
        if axis == SweepAxisEnum.INTERVAL:
            return config.with_updates("policy", interval=int(value))
        if str(value).strip().lower() == EvictionModeEnum.UNLIMITED.value:
            return config.with_updates("policy", eviction=EvictionModeEnum.UNLIMITED.value)
        return config.with_updates("policy", capacity=int(value))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{axis.value} value {value!r} is not valid: {e}") from e


def sweep(axis: Union[SweepAxisEnum, str], values: Sequence[Union[int, float, str]], base: RunConfig,
          seeds: Optional[Sequence[int]] = None, workers: Optional[int] = None) -> list[SweepRow]:
    try:
        axis = SweepAxisEnum(axis)
    except ValueError:
        raise SpecError(f"unknown sweep axis {axis!r}; expected one of {[a.value for a in SweepAxisEnum]}")
    values = list(values)
    seeds = list(seeds if seeds is not None else base.seeds)
    if not values:
        raise UsageError("sweep needs at least one value")
    if not seeds:
        raise UsageError("sweep needs at least one seed")

    configs = [apply_axis(base, axis, value) for value in values]
    grouped = run_variants(configs, seeds, workers or base.workers)

    rows = []
    for value, chunk in zip(values, grouped):
        jf = np.asarray([r.mean_jf for r in chunk])
        rows.append(SweepRow(
            axis=axis.value,
            value=value_label(value),
            seeds=len(seeds),
            mean_j=float(np.mean([r.mean_j for r in chunk])),
            mean_f=float(np.mean([r.mean_f for r in chunk])),
            mean_jf=float(jf.mean()),
            std_jf=float(jf.std()),
            mean_occupancy=float(np.mean([np.mean(r.occupancy) for r in chunk])),
        ))
        logger.info("sweep %s=%s J&F=%.4f over %d seed(s)", axis.value, rows[-1].value, rows[-1].mean_jf, len(seeds))
    return rows


class BenchRow(BaseModel):
    frame_count: int
    eviction: str
    bucket_start: int
    bucket_end: int
    p50_ms: float
    p90_ms: float
    occupancy: int


def bench_rows(result: EvalResult, frame_count: int, eviction: EvictionModeEnum) -> list[BenchRow]:
    times = np.asarray(result.wall_times) * 1000.0
    occupancy = result.occupancy
    rows = []
    for start in range(0, frame_count, BENCH_BUCKET):
        end = min(start + BENCH_BUCKET, frame_count)
        bucket = times[start:end]
        rows.append(BenchRow(
            frame_count=frame_count, eviction=eviction.value, bucket_start=start, bucket_end=end,
            p50_ms=float(np.percentile(bucket, 50)), p90_ms=float(np.percentile(bucket, 90)),
            occupancy=occupancy[end - 1],
        ))
    return rows


def bench(config: RunConfig, frame_counts: Sequence[int], seed: Optional[int] = None) -> list[BenchRow]:
    """Per-bucket latency and occupancy for the configured bounded policy and for unlimited memory."""
    frame_counts = list(frame_counts)
    if not frame_counts:
        raise UsageError("bench needs at least one frame count")
    for count in frame_counts:
        if count < MIN_BENCH_FRAMES:
            raise UsageError(f"bench frame counts must be >= {MIN_BENCH_FRAMES}, got {count}")
    seed = config.seeds[0] if seed is None else seed
    bounded = config.policy.eviction
    if bounded == EvictionModeEnum.UNLIMITED:
        bounded = EvictionModeEnum.DYNAMIC

    rows = []
    for count in frame_counts:
        for eviction in (bounded, EvictionModeEnum.UNLIMITED):
            run_config = config.with_updates("video", frame_count=count).with_updates(
                "policy", eviction=eviction.value)
            result = run_seed(run_config, seed)
            rows.extend(bench_rows(result, count, eviction))
    return rows


__all__ = [
    "Episode", "run_episode", "run_seed", "run_seeds", "sweep", "SweepRow",
    "bench", "BenchRow", "corrupt_prediction", "prior_mask", "frame_metrics", "apply_axis",
]
