import numpy as np
import pytest

from vosmem.core import FeatureGrid, LabeledMaskSet, ObjectMask
from vosmem.descriptor import (
    DescriptorEncoder,
    decode_labels,
    extract_descriptor,
    position_ramp,
)
from vosmem.errors import DecodeError, ResolutionError
from vosmem.quality import mask_iou
from vosmem.readout import ReadOutput, memory_read
from vosmem.video import generate_video


def test_uniform_frame_key():
    frame = np.empty((16, 16, 3))
    frame[:] = (0.2, 0.4, 0.6)
    encoder = DescriptorEncoder(stride=4)
    descriptor = encoder.encode(frame)
    key = descriptor.key.data
    assert np.allclose(key[:, :, :3], np.array([0.2, 0.4, 0.6]) * encoder.color_gain)
    assert np.allclose(key[:, :, 3:5], position_ramp(4, 4) * encoder.position_gain)
    assert position_ramp(4, 4)[0, 0].tolist() == [0.125, 0.125]
    assert position_ramp(4, 4)[3, 1].tolist() == [0.875, 0.375]
    assert descriptor.value.channels == 3 and descriptor.label_channels is None


def test_completed_keys_share_one_norm():
    frame = np.random.default_rng(0).random((32, 32, 3))
    encoder = DescriptorEncoder()
    key = encoder.encode(frame).key
    assert np.allclose(np.sum(key.data ** 2, axis=2), encoder.key_radius)


def test_full_frame_object_occupancy(block_masks):
    labels = block_masks((8, 8), [(0, 0, 8, 8)])
    descriptor = extract_descriptor(np.zeros((8, 8, 3)), labels, stride=4)
    assert np.all(descriptor.label_channels[:, :, 1] == 1.0)
    assert np.all(descriptor.label_channels[:, :, 0] == 0.0)


def test_half_covered_cell(block_masks):
    labels = block_masks((4, 4), [(0, 0, 4, 2)])
    descriptor = extract_descriptor(np.zeros((4, 4, 3)), labels, stride=4)
    assert descriptor.label_channels[0, 0].tolist() == [0.5, 0.5]


def test_label_channels_sum_to_one_for_soft_masks():
    rng = np.random.default_rng(2)
    labels = LabeledMaskSet((ObjectMask(rng.random((8, 8))), ObjectMask(rng.random((8, 8)))))
    descriptor = extract_descriptor(rng.random((8, 8, 3)), labels, stride=2)
    assert np.allclose(descriptor.label_channels.sum(axis=2), 1.0)


def test_stride_must_divide():
    with pytest.raises(ResolutionError):
        extract_descriptor(np.zeros((10, 10, 3)), stride=4)


def test_self_retrieval_reproduces_ground_truth(block_masks):
    frame = np.full((16, 16, 3), 0.1)
    labels = block_masks((16, 16), [(0, 0, 8, 8), (8, 4, 16, 12)])
    frame[0:8, 0:8] = (0.9, 0.1, 0.1)
    frame[8:16, 4:12] = (0.1, 0.2, 0.9)
    memory = extract_descriptor(frame, labels)
    query = extract_descriptor(frame)
    decoded = decode_labels(memory_read(query.key, query.value, memory.key, memory.value), 2)
    assert np.array_equal(decoded.to_label_map(), labels.to_label_map())


def test_uniform_distribution_decodes_to_background():
    combined = np.concatenate([np.zeros((2, 2, 3)), np.zeros((2, 2, 3)), np.full((2, 2, 3), 1 / 3)], axis=2)
    out = ReadOutput(FeatureGrid(combined), np.ones((4, 4)) / 4, query_channels=3)
    decoded = decode_labels(out, 2, stride=2)
    assert decoded.shape == (4, 4)
    assert all(mask.is_empty() for mask in decoded.masks)


def test_decode_channel_mismatch():
    out = ReadOutput(FeatureGrid(np.zeros((2, 2, 7))), np.ones((4, 4)) / 4, query_channels=3)
    with pytest.raises(DecodeError):
        decode_labels(out, 2)


def test_two_objects_frame_one_from_frame_zero(two_rectangles_spec):
    video = generate_video(two_rectangles_spec)
    image0, truth0 = video.frame(0)
    image1, truth1 = video.frame(1)
    memory = extract_descriptor(image0, truth0)
    query = extract_descriptor(image1)
    decoded = decode_labels(memory_read(query.key, query.value, memory.key, memory.value), 2)
    for predicted, truth in zip(decoded.masks, truth1.masks):
        assert mask_iou(predicted, truth) >= 0.95
