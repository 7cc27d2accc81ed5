import numpy as np
import pytest
from pydantic import ValidationError

from vosmem.errors import SpecError
from vosmem.models import ScenarioEnum, ShapeEnum
from vosmem.video import (
    REVISIT_A,
    REVISIT_B,
    MoverSpec,
    VideoSpec,
    Waypoint,
    generate_video,
    scenario_spec,
    scene_revisit,
)


def disc_video(**kwargs):
    mover = MoverSpec(shape=ShapeEnum.DISC, radius=6, color=(0.8, 0.2, 0.1),
                      waypoints=[Waypoint(frame=0, row=20, col=20)], **kwargs)
    return generate_video(VideoSpec(frame_count=30, objects=[mover]))


def test_stationary_disc_has_identical_masks():
    video = disc_video()
    _, first = video.frame(0)
    for t in range(1, 30):
        _, truth = video.frame(t)
        assert np.array_equal(truth.stacked(), first.stacked())
    assert first.masks[0].area > 0


def test_occlusion_window_hides_object_exactly():
    video = disc_video(occlusions=[(10, 20)])
    for t in range(30):
        image, truth = video.frame(t)
        assert truth.masks[0].is_empty() == (10 <= t < 20)
    hidden, _ = video.frame(15)
    assert np.allclose(hidden, 0.1)


def test_regeneration_is_bit_identical():
    spec = scenario_spec(ScenarioEnum.DISTRACTORS, 40, seed=3).model_copy(update={"pixel_noise": 0.05})
    a, b = generate_video(spec), generate_video(spec)
    for t in (0, 17, 39):
        image_a, truth_a = a.frame(t)
        image_b, truth_b = b.frame(t)
        assert image_a.tobytes() == image_b.tobytes()
        assert np.array_equal(truth_a.stacked(), truth_b.stacked())


def test_waypoints_outside_frame_are_rejected():
    mover = MoverSpec(waypoints=[Waypoint(frame=0, row=70, col=10)])
    with pytest.raises(SpecError):
        generate_video(VideoSpec(frame_count=5, objects=[mover]))


def test_spec_validation():
    with pytest.raises(ValidationError):
        VideoSpec(frame_count=1, objects=[MoverSpec(waypoints=[Waypoint(frame=0, row=5, col=5)])])
    with pytest.raises(ValidationError):
        MoverSpec(waypoints=[Waypoint(frame=3, row=5, col=5), Waypoint(frame=3, row=6, col=6)])


def test_rectangle_footprint_follows_pixel_centers():
    mover = MoverSpec(extent=(4, 6), waypoints=[Waypoint(frame=0, row=4, col=5)])
    inside = mover.footprint(0, 8, 10)
    rows, cols = np.nonzero(inside)
    assert (rows.min(), rows.max(), cols.min(), cols.max()) == (2, 5, 2, 7)


def test_objects_occlude_distractors_and_masks_stay_disjoint():
    target = MoverSpec(extent=(8, 8), color=(1.0, 0.0, 0.0), waypoints=[Waypoint(frame=0, row=8, col=8)])
    distractor = MoverSpec(extent=(8, 8), color=(0.0, 1.0, 0.0), waypoints=[Waypoint(frame=0, row=8, col=10)])
    second = MoverSpec(extent=(8, 8), color=(0.0, 0.0, 1.0), waypoints=[Waypoint(frame=0, row=10, col=8)])
    video = generate_video(VideoSpec(frame_count=2, height=16, width=16, objects=[target, second],
                                     distractors=[distractor]))
    image, truth = video.frame(0)
    assert truth.stacked().sum(axis=0).max() == 1.0
    # the later object wins overlapping pixels
    assert truth.to_label_map()[10, 8] == 2
    assert image[4, 12].tolist() == [0.0, 1.0, 0.0]
    assert image[5, 5].tolist() == [1.0, 0.0, 0.0]


def test_color_keyframes_interpolate():
    spec = scene_revisit(30, seed=0)
    mover = spec.objects[0]
    assert np.allclose(mover.color_at(9), REVISIT_A)
    assert np.allclose(mover.color_at(10), REVISIT_B)
    assert np.allclose(mover.color_at(25), REVISIT_A)


def test_scene_revisit_returns_home():
    spec = scene_revisit(60, seed=4)
    mover = spec.objects[0]
    assert mover.position(0) == mover.position(40) == mover.position(59) == (32.0, 32.0)
    video = generate_video(spec)
    _, start = video.frame(0)
    _, back = video.frame(50)
    assert np.array_equal(start.stacked(), back.stacked())


@pytest.mark.parametrize("scenario", list(ScenarioEnum))
def test_every_scenario_renders(scenario):
    video = generate_video(scenario_spec(scenario, 30, seed=1))
    image, truth = video.frame(29)
    assert image.shape == (64, 64, 3)
    assert 0.0 <= image.min() and image.max() <= 1.0
    assert truth.object_count == video.object_count


def test_unknown_scenario():
    with pytest.raises(SpecError):
        scenario_spec("maze", 10)
