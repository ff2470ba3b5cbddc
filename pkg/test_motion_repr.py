#!/usr/bin/env python3
"""
Test the skeleton, forward kinematics and the 263-wide motion representation
"""

import os
import sys

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(__file__))

from app.models.motion import LAYOUT, JointPositions, MotionSeq
from app.motion import (
    FeatureNormalizer,
    bone_length_drift,
    decode,
    encode,
    feature_channel_names,
    foot_contacts,
    forward_kinematics,
    load_motion,
    load_skeleton,
    resample,
    resample_fps,
    root_local_positions,
    save_motion,
)
from app.motion.skeleton import Skeleton
from app.motion.synthetic import PROGRAMS, generate_motion
from app.utils.errors import ConfigError, ContractError, DataError, ShapeError
from app.utils.rng import make_rng

SKELETON = load_skeleton()


def _static_pose(frames=10):
    rest = SKELETON.rest_pose()
    return JointPositions(positions=np.repeat(rest[None], frames, axis=0), root_yaw=np.zeros(frames))


def _turning_walk(frames=30):
    """Root moving on an arc while the heading turns and the arms move"""
    times = np.arange(frames) / 20.0
    rotations = np.zeros((frames, SKELETON.joint_count, 3))
    rotations[:, SKELETON.joint_index("left_shoulder"), 2] = 0.8 * np.sin(2.0 * times)
    rotations[:, SKELETON.joint_index("right_hip"), 0] = 0.4 * np.cos(3.0 * times)
    yaw = 0.7 + 0.9 * times
    root = np.stack([0.5 + np.sin(yaw), np.full(frames, SKELETON.root_height), -0.3 + np.cos(yaw)], axis=1)
    return forward_kinematics(SKELETON, rotations, root, yaw)


def test_layout_is_263_wide():
    print("🧪 Testing feature layout")
    assert LAYOUT.width == 263
    assert (LAYOUT.root, LAYOUT.positions, LAYOUT.rotations, LAYOUT.velocities, LAYOUT.contacts) == (
        slice(0, 4), slice(4, 67), slice(67, 193), slice(193, 259), slice(259, 263))
    names = feature_channel_names()
    assert len(names) == 263
    assert len(set(names)) == 263


def test_skeleton_loads_smpl22():
    assert SKELETON.joint_count == 22
    assert SKELETON.joint_names[0] == "pelvis"
    assert SKELETON.contact_joints == [7, 10, 8, 11]
    assert SKELETON.rest_pose()[0, 1] == pytest.approx(SKELETON.root_height)


def test_skeleton_rejects_bad_trees():
    data = SKELETON.to_dict()
    data["joints"][3]["parent"] = 5
    with pytest.raises(ConfigError):
        Skeleton.from_dict(data)
    data = SKELETON.to_dict()
    data["contact_joints"] = [7, 10]
    with pytest.raises(ConfigError):
        Skeleton.from_dict(data)


def test_zero_rotations_give_the_rest_pose():
    print("🧪 Testing forward kinematics")
    frames = 4
    root = np.tile([0.0, SKELETON.root_height, 0.0], (frames, 1))
    posed = forward_kinematics(SKELETON, np.zeros((frames, 22, 3)), root, np.zeros(frames))
    np.testing.assert_allclose(posed.positions, np.repeat(SKELETON.rest_pose()[None], frames, axis=0), atol=1e-12)


def test_raised_shoulder_lifts_the_arm():
    rotations = np.zeros((1, 22, 3))
    rotations[0, SKELETON.joint_index("left_shoulder")] = [0.0, 0.0, np.pi / 2]
    posed = forward_kinematics(SKELETON, rotations, np.array([[0.0, SKELETON.root_height, 0.0]]), np.zeros(1))
    shoulder = posed.positions[0, SKELETON.joint_index("left_shoulder")]
    wrist = posed.positions[0, SKELETON.joint_index("left_wrist")]
    np.testing.assert_allclose(wrist - shoulder, [0.0, 0.51, 0.0], atol=1e-12)


def test_forward_kinematics_preserves_bone_lengths():
    assert bone_length_drift(_turning_walk()) < 1e-9
    positions, _ = generate_motion(PROGRAMS["walk"], 40, make_rng(0, "walk"))
    assert bone_length_drift(positions) < 1e-9


def test_static_pose_encoding():
    print("🧪 Testing static pose encoding")
    motion = encode(_static_pose())
    features = motion.features
    assert features.shape == (10, 263)
    np.testing.assert_allclose(features[:, :3], 0.0, atol=1e-12)
    np.testing.assert_allclose(features[:, 3], SKELETON.root_height)
    np.testing.assert_allclose(features[:, LAYOUT.velocities], 0.0, atol=1e-12)
    np.testing.assert_array_equal(features[:, LAYOUT.contacts], 1.0)
    identity = np.tile([1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 21)
    np.testing.assert_allclose(features[:, LAYOUT.rotations], np.tile(identity, (10, 1)), atol=1e-12)


def test_decode_inverts_encode_up_to_the_start_frame():
    print("🧪 Testing encode/decode round trip")
    original = _turning_walk()
    decoded = decode(encode(original))

    yaw0 = original.root_yaw[0]
    ground0 = original.positions[0, 0] * np.array([1.0, 0.0, 1.0])
    expected = Rotation.from_euler("y", -yaw0).apply((original.positions - ground0).reshape(-1, 3))
    np.testing.assert_allclose(decoded.positions, expected.reshape(original.positions.shape), atol=1e-9)
    np.testing.assert_allclose(decoded.root_yaw, original.root_yaw - yaw0, atol=1e-9)
    np.testing.assert_allclose(root_local_positions(decoded), root_local_positions(original), atol=1e-9)


def test_encode_is_deterministic():
    positions = _turning_walk()
    assert np.array_equal(encode(positions).features, encode(positions).features)


def test_encode_needs_two_frames_and_22_joints():
    with pytest.raises(ContractError):
        encode(_static_pose(frames=1))
    bad = JointPositions(positions=np.zeros((5, 21, 3)), root_yaw=np.zeros(5))
    with pytest.raises(ShapeError):
        encode(bad)


def test_foot_contacts_follow_foot_speed():
    static = foot_contacts(_static_pose())
    np.testing.assert_array_equal(static, 1.0)
    positions, _ = generate_motion(PROGRAMS["walk"], 40, make_rng(1, "walk"))
    assert foot_contacts(positions).mean() < 0.5


def test_resample_keeps_endpoints_and_linear_signals():
    print("🧪 Testing resampling")
    ramp = np.arange(11, dtype=np.float64)[:, None] * np.array([[1.0, -2.0]])
    up = resample(ramp, 20.0, 60.0)
    assert up.shape == (31, 2)
    np.testing.assert_allclose(up[0], ramp[0])
    np.testing.assert_allclose(up[-1], ramp[-1])
    np.testing.assert_allclose(np.diff(up[:, 0]), 1.0 / 3.0)
    np.testing.assert_array_equal(resample(ramp, 20.0, 20.0), ramp)
    with pytest.raises(ContractError):
        resample(ramp[:1], 20.0, 60.0)


def test_resample_fps_positions():
    positions = _turning_walk(frames=21)
    up = resample_fps(positions, 20.0, 60.0)
    assert up.frames == 61 and up.fps == 60.0
    np.testing.assert_allclose(up.positions[::3], positions.positions, atol=1e-12)


def test_motion_seq_validation():
    with pytest.raises(ShapeError):
        MotionSeq(features=np.zeros((4, 262)))
    features = np.zeros((4, 263))
    features[:, LAYOUT.contacts] = 0.3
    with pytest.raises(DataError):
        MotionSeq(features=features)
    thresholded = MotionSeq.from_prediction(np.zeros((4, 263)) + np.array([0.0] * 259 + [0.7, 0.2, 0.5, 0.51]))
    np.testing.assert_array_equal(thresholded.contacts[0], [1.0, 0.0, 0.0, 1.0])


def test_normalizer_round_trip_and_floor():
    print("🧪 Testing feature normalizer")
    motions = [encode(generate_motion(PROGRAMS["wave"], 30, make_rng(i, "wave"))[0]) for i in range(3)]
    normalizer = FeatureNormalizer.fit(motions)
    assert np.all(normalizer.std >= 1e-2)
    # the root height never changes for a standing program
    assert normalizer.std[3] == pytest.approx(1e-2)
    features = motions[0].features
    np.testing.assert_allclose(normalizer.denormalize(normalizer.normalize(features)), features, atol=1e-12)
    restored = FeatureNormalizer.from_arrays(normalizer.to_arrays())
    np.testing.assert_array_equal(restored.mean, normalizer.mean)
    with pytest.raises(DataError):
        FeatureNormalizer.from_arrays({})
    with pytest.raises(ContractError):
        FeatureNormalizer.fit([])


def test_motion_file_round_trip(tmp_path):
    print("🧪 Testing motion files")
    motion = encode(_turning_walk())
    path = str(tmp_path / "walk.motion")
    save_motion(path, motion, config_hash="abc", seed=7, meta={"text": "walk"})
    loaded, header = load_motion(path)
    assert np.array_equal(loaded.features, motion.features)
    assert header["seed"] == 7 and header["config_hash"] == "abc"
    assert header["meta"]["frames"] == motion.frames

    garbage = tmp_path / "garbage.motion"
    garbage.write_bytes(b"not a motion file")
    with pytest.raises(DataError):
        load_motion(str(garbage))
    with pytest.raises(DataError):
        load_motion(str(tmp_path / "missing.motion"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
