"""Trend experiments on the bundled configs. Run with ``pytest -m slow``."""
from pathlib import Path

import numpy as np
import pytest

from vosmem.config import load_config
from vosmem.harness import run_seed, run_variants, sweep

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def mean_of(results, attribute):
    return float(np.mean([getattr(result, attribute) for result in results]))


def test_threshold_zero_is_worst_under_corruption():
    config = load_config(CONFIGS / "corruption.yaml")
    rows = {row.value: row.mean_jf for row in sweep("threshold", [0.0, 0.4, 0.8], config)}
    assert rows["0.8"] - rows["0"] >= 0.02
    assert rows["0"] == min(rows.values())


def test_small_capacity_keeps_accuracy():
    config = load_config(CONFIGS / "capacity.yaml")
    rows = {row.value: row.mean_jf for row in sweep("capacity", [25, "unlimited"], config)}
    assert abs(rows["25"] - rows["unlimited"]) <= 0.01


def test_dynamic_eviction_beats_recency_on_scene_revisit():
    config = load_config(CONFIGS / "scene_revisit.yaml")
    dynamic, fifo = run_variants(
        [config.with_updates("policy", eviction="dynamic"), config.with_updates("policy", eviction="fifo_recent")],
        config.seeds, workers=2 * config.workers)
    assert mean_of(dynamic, "mean_j") - mean_of(fifo, "mean_j") >= 0.05


def test_bounded_memory_keeps_frame_cost_flat():
    config = load_config(CONFIGS / "bench.yaml").with_updates("video", frame_count=2000)
    result = run_seed(config, 0)
    times = np.asarray(result.wall_times)
    assert np.median(times[-100:]) <= 1.5 * np.median(times[100:200])
    assert set(result.occupancy[200:]) == {25}


def test_unlimited_memory_grows():
    config = load_config(CONFIGS / "bench.yaml").with_updates("video", frame_count=600).with_updates(
        "policy", eviction="unlimited")
    result = run_seed(config, 0)
    occupancy = np.asarray(result.occupancy)
    assert np.all(np.diff(occupancy) >= 0) and occupancy[-1] > occupancy[200] > occupancy[0]
    times = np.asarray(result.wall_times)
    early, middle, late = (np.median(times[start:start + 100]) for start in (100, 300, 500))
    assert early < middle < late


def test_weak_prior_is_at_least_as_good_as_strong():
    config = load_config(CONFIGS / "distractors.yaml")
    weak, strong = run_variants(
        [config.with_updates("gate", mode="weak"), config.with_updates("gate", mode="strong")],
        config.seeds, workers=4)
    assert mean_of(weak, "mean_jf") >= mean_of(strong, "mean_jf")
