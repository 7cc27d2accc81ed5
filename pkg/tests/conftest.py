import numpy as np
import pytest

from vosmem.config import RunConfig, validate_config
from vosmem.core import LabeledMaskSet
from vosmem.video import MoverSpec, VideoSpec, Waypoint


@pytest.fixture
def block_masks():
    # 每个 (top, left, bottom, right) 块对应一个目标
    def build(shape, blocks) -> LabeledMaskSet:
        label_map = np.zeros(shape, dtype=int)
        for label, (top, left, bottom, right) in enumerate(blocks, start=1):
            label_map[top:bottom, left:right] = label
        return LabeledMaskSet.from_label_map(label_map, len(blocks))
    return build


@pytest.fixture
def make_config():
    # 在默认配置上覆盖若干字段后重新校验
    def build(**sections) -> RunConfig:
        data = RunConfig().model_dump(mode="json")
        for section, values in sections.items():
            if isinstance(values, dict):
                data[section].update(values)
            else:
                data[section] = values
        return validate_config(data)
    return build


@pytest.fixture
def two_rectangles_spec():
    """Two grid-aligned rectangles moving one cell per frame."""
    return VideoSpec(
        frame_count=4,
        objects=[
            MoverSpec(extent=(16, 12), color=(0.9, 0.2, 0.2),
                      waypoints=[Waypoint(frame=0, row=16, col=14), Waypoint(frame=3, row=16, col=26)]),
            MoverSpec(extent=(12, 16), color=(0.2, 0.3, 0.9),
                      waypoints=[Waypoint(frame=0, row=46, col=40), Waypoint(frame=3, row=46, col=28)]),
        ],
    )
