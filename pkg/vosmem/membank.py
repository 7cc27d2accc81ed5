"""Bounded memory bank with interval-triggered, quality-gated admission and
reference-score eviction.

One writer per bank: the per-video inference loop. Snapshots are plain
arrays and may be read while no admission is in flight.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vosmem.core import FeatureGrid
from vosmem.errors import (
    CausalityError,
    DimensionError,
    EmptyMemoryError,
    NoEvictableError,
    OrderingError,
)
from vosmem.models import AdmissionEnum, EvictionModeEnum, enum_comment
from vosmem.quality import QualityReport

logger = logging.getLogger(__name__)


class BankPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    capacity: int = Field(default=25, ge=1, description="upper memory limit, ignored when eviction is unlimited")
    sigma: float = Field(default=0.8, ge=0.0, le=1.0, description="memory threshold on the normalized score")
    interval: int = Field(default=5, ge=1, description="storage is triggered every `interval` frames")
    eviction: EvictionModeEnum = Field(default=EvictionModeEnum.DYNAMIC,
                                       description=enum_comment(EvictionModeEnum))
    protect_first_frame: bool = True
    accuracy_weight: float = Field(default=1.0, ge=0.0)
    decay_rate: float = Field(default=1.0, gt=0.0, description="lambda in exp(-lambda * |t - k|)")


@dataclass(frozen=True)
class MemoryEntry:
    frame_index: int
    key: FeatureGrid
    value: FeatureGrid
    normalized_quality: float
    protected: bool = False

    def __post_init__(self):
        if (self.key.height, self.key.width) != (self.value.height, self.value.width):
            raise DimensionError("memory key and value must share height and width")
        if self.frame_index < 0:
            raise OrderingError(f"negative frame index {self.frame_index}")
        if self.protected and self.frame_index != 0:
            raise OrderingError("only the annotated frame 0 can be protected")


@dataclass(frozen=True)
class ReferenceScore:
    frame_index: int
    accuracy: float
    consistency: float
    total: float


@dataclass(frozen=True)
class AdmissionResult:
    decision: AdmissionEnum
    evicted: Optional[MemoryEntry] = None


@dataclass(frozen=True)
class MergedSnapshot:
    """Memory locations with identical keys collapsed into one row.

    ``value`` rows are the mean of their group and ``multiplicity`` counts the
    stored locations behind each row.
    """

    key: FeatureGrid
    value: FeatureGrid
    multiplicity: np.ndarray

    @property
    def location_count(self) -> int:
        return int(self.multiplicity.sum())


def temporal_score(k: int, t: int, decay_rate: float = 1.0) -> float:
    if k > t:
        raise CausalityError(f"memory frame {k} lies after current frame {t}")
    return math.exp(-decay_rate * abs(t - k))


def reference_score(entry: MemoryEntry, t: int, accuracy_weight: float = 1.0,
                    decay_rate: float = 1.0) -> ReferenceScore:
    accuracy = entry.normalized_quality
    consistency = temporal_score(entry.frame_index, t, decay_rate)
    return ReferenceScore(
        frame_index=entry.frame_index,
        accuracy=accuracy,
        consistency=consistency,
        total=accuracy_weight * accuracy + consistency,
    )


def grid_digest(grid: FeatureGrid) -> str:
    return hashlib.sha256(grid.data.astype("<f8").tobytes()).hexdigest()[:16]


class MemoryBank:

    def __init__(self, policy: Optional[BankPolicy] = None):
        self.policy = policy or BankPolicy()
        self.entries: list[MemoryEntry] = []
        self.pending_trigger = False
        self._snapshot: Optional[tuple[FeatureGrid, FeatureGrid]] = None
        self._merged: Optional[MergedSnapshot] = None

    @property
    def capacity(self) -> int:
        return self.policy.capacity

    @property
    def sigma(self) -> float:
        return self.policy.sigma

    @property
    def interval(self) -> int:
        return self.policy.interval

    @property
    def bounded(self) -> bool:
        return self.policy.eviction != EvictionModeEnum.UNLIMITED

    def __len__(self) -> int:
        return len(self.entries)

    def frame_indices(self) -> list[int]:
        return [entry.frame_index for entry in self.entries]

    def is_full(self) -> bool:
        return self.bounded and len(self.entries) >= self.capacity

    def reference_scores(self, t: int) -> list[ReferenceScore]:
        return [
            reference_score(entry, t, self.policy.accuracy_weight, self.policy.decay_rate)
            for entry in self.entries
        ]

    def evict_lowest(self, t: int) -> MemoryEntry:
        """Drop the non-protected entry with the smallest reference total; ties go to the older frame."""
        candidates = [
            (score.total, entry.frame_index, position)
            for position, (entry, score) in enumerate(zip(self.entries, self.reference_scores(t)))
            if not entry.protected
        ]
        if not candidates:
            raise NoEvictableError("every stored entry is protected")
        _, _, position = min(candidates)
        return self._remove(position)

    def evict_oldest(self) -> MemoryEntry:
        for position, entry in enumerate(self.entries):
            if not entry.protected:
                return self._remove(position)
        raise NoEvictableError("every stored entry is protected")

    def _remove(self, position: int) -> MemoryEntry:
        self._snapshot = self._merged = None
        return self.entries.pop(position)

    def _evict(self, t: int) -> MemoryEntry:
        if self.policy.eviction == EvictionModeEnum.FIFO_RECENT:
            return self.evict_oldest()
        return self.evict_lowest(t)

    def _insert(self, entry: MemoryEntry) -> None:
        self._snapshot = self._merged = None
        self.entries.append(entry)

    def consider_admission(self, report: QualityReport, key: FeatureGrid, value: FeatureGrid,
                           t: int) -> AdmissionResult:
        if t < 0:
            raise OrderingError(f"negative frame index {t}")
        if self.entries and t <= self.entries[-1].frame_index:
            raise OrderingError(f"frame {t} does not follow stored frame {self.entries[-1].frame_index}")

        if t == 0:
            protected = self.policy.protect_first_frame
            return self._admit(MemoryEntry(0, key, value, report.normalized_score, protected), t)

        due = t % self.interval == 0 or self.pending_trigger
        if not due:
            return AdmissionResult(AdmissionEnum.NOT_DUE)
        if report.normalized_score < self.sigma:
            self.pending_trigger = True
            logger.debug("frame %d deferred: score %.4f < sigma %.2f", t, report.normalized_score, self.sigma)
            return AdmissionResult(AdmissionEnum.DEFERRED)

        self.pending_trigger = False
        return self._admit(MemoryEntry(t, key, value, report.normalized_score), t)

    def _admit(self, entry: MemoryEntry, t: int) -> AdmissionResult:
        evicted = None
        if self.is_full():
            try:
                evicted = self._evict(t)
            except NoEvictableError:
                logger.debug("frame %d dropped: bank full of protected entries", t)
                return AdmissionResult(AdmissionEnum.REJECTED_FULL)
            logger.debug("frame %d evicts frame %d", t, evicted.frame_index)
        self._insert(entry)
        return AdmissionResult(AdmissionEnum.ADMITTED, evicted)

    def snapshot_keys_values(self) -> tuple[FeatureGrid, FeatureGrid]:
        if not self.entries:
            raise EmptyMemoryError("the memory bank holds no frames")
        if self._snapshot is None:
            self._snapshot = (
                FeatureGrid.stack_locations([entry.key for entry in self.entries]),
                FeatureGrid.stack_locations([entry.value for entry in self.entries]),
            )
        return self._snapshot

    def merged_snapshot(self) -> MergedSnapshot:
        if self._merged is None:
            key, value = self.snapshot_keys_values()
            unique, inverse, counts = np.unique(key.locations, axis=0, return_inverse=True, return_counts=True)
            sums = np.zeros((unique.shape[0], value.channels))
            np.add.at(sums, inverse.reshape(-1), value.locations)
            rows = unique.shape[0]
            self._merged = MergedSnapshot(
                key=FeatureGrid.from_locations(unique, rows, 1),
                value=FeatureGrid.from_locations(sums / counts[:, None], rows, 1),
                multiplicity=counts,
            )
            logger.debug("merged %d memory locations into %d rows", key.location_count, rows)
        return self._merged

    def to_text(self, include_digests: bool = True) -> str:
        """Deterministic text form used by the golden policy tests."""
        lines = [
            f"capacity={self.capacity if self.bounded else 'unlimited'} sigma={self.sigma:.4f} "
            f"interval={self.interval} eviction={self.policy.eviction.value} "
            f"pending={int(self.pending_trigger)} size={len(self.entries)}"
        ]
        for entry in self.entries:
            line = f"{entry.frame_index} q={entry.normalized_quality:.6f} protected={int(entry.protected)}"
            if include_digests:
                line += f" key={grid_digest(entry.key)} value={grid_digest(entry.value)}"
            lines.append(line)
        return "\n".join(lines) + "\n"
