#!/usr/bin/env python3
"""
Test the evaluation metrics against hand-computed values
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(__file__))

from app.metrics import (
    beat_align_score,
    beats_from_speed,
    classify_by_kinetics,
    diversity,
    feature_matrix,
    frechet_distance,
    frechet_from_features,
    geometric_features,
    kinematic_beats,
    kinetic_features,
    multimodality,
    psd_sqrt,
    r_precision_mm_dist,
)
from app.models.metrics import BeatSequence, FeatureStats
from app.models.motion import JointPositions
from app.motion import forward_kinematics, load_skeleton
from app.motion.synthetic import PROGRAMS, generate_motion
from app.utils.errors import ContractError, DataError, ShapeError
from app.utils.rng import make_rng

SKELETON = load_skeleton()


def _stats(mean, cov):
    return FeatureStats(mean=np.atleast_1d(mean), cov=np.atleast_2d(cov), count=10)


def _pose(shoulder_angle=0.0, frames=6):
    rotations = np.zeros((frames, 22, 3))
    rotations[:, SKELETON.joint_index("left_shoulder"), 2] = shoulder_angle
    rotations[:, SKELETON.joint_index("right_shoulder"), 2] = -shoulder_angle
    root = np.tile([0.0, SKELETON.root_height, 0.0], (frames, 1))
    return forward_kinematics(SKELETON, rotations, root, np.zeros(frames))


# --- Frechet distance -------------------------------------------------------

def test_frechet_one_dimensional_oracle():
    print("🧪 Testing Frechet distance oracles")
    assert frechet_distance(_stats(0.0, 1.0), _stats(3.0, 1.0)) == pytest.approx(9.0)
    # equal means, sigma 1 vs 2: (1 - 2)^2
    assert frechet_distance(_stats(0.0, 1.0), _stats(0.0, 4.0)) == pytest.approx(1.0)
    assert frechet_distance(_stats(1.0, 1.0), _stats(3.0, 4.0)) == pytest.approx(5.0)


def test_frechet_is_zero_on_itself_and_symmetric():
    rng = make_rng(0, "frechet")
    a = rng.standard_normal((50, 4))
    b = rng.standard_normal((40, 4)) * 2.0 + 1.0
    assert frechet_from_features(a, a) == pytest.approx(0.0, abs=1e-9)
    assert frechet_from_features(a, b) == pytest.approx(frechet_from_features(b, a), rel=1e-8)
    assert frechet_from_features(a, b) > 0.0


def test_frechet_handles_singular_covariances():
    # fewer samples than dimensions: rank-deficient but still PSD
    rng = make_rng(1, "frechet")
    a = rng.standard_normal((3, 6))
    value = frechet_from_features(a, a + 0.5)
    assert value == pytest.approx(6 * 0.25, rel=1e-6)


def test_frechet_dimension_mismatch():
    with pytest.raises(ShapeError):
        frechet_distance(_stats([0.0, 0.0], np.eye(2)), _stats(0.0, 1.0))
    with pytest.raises(ContractError):
        FeatureStats.from_features(np.zeros((1, 3)))


def test_psd_sqrt_squares_back():
    rng = make_rng(2, "sqrt")
    m = rng.standard_normal((5, 5))
    spd = m @ m.T
    root = psd_sqrt(spd)
    np.testing.assert_allclose(root @ root, spd, atol=1e-9)


# --- Diversity and multimodality ---------------------------------------------

def test_diversity_all_pairs_oracle():
    print("🧪 Testing diversity")
    points = np.array([[0.0], [1.0], [3.0]])
    assert diversity(points) == pytest.approx(2.0)
    assert diversity(np.array([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)


def test_diversity_sampled_pairs_are_reproducible():
    features = make_rng(3, "div").standard_normal((30, 3))
    a = diversity(features, pairs=20, rng=make_rng(4, "pairs"))
    b = diversity(features, pairs=20, rng=make_rng(4, "pairs"))
    assert a == b
    from scipy.spatial.distance import pdist
    distances = pdist(features)
    assert distances.min() <= a <= distances.max()
    with pytest.raises(ContractError):
        diversity(features[:1])


def test_multimodality_oracle():
    groups = [np.array([[0.0], [2.0]]), np.array([[5.0], [5.0]])]
    assert multimodality(groups) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        multimodality([np.array([[0.0]])])
    with pytest.raises(ContractError):
        multimodality([])


# --- Retrieval -----------------------------------------------------------------

def test_r_precision_oracle_pairs():
    print("🧪 Testing R-precision")
    embeddings = np.eye(8) * 3.0
    scores = r_precision_mm_dist(embeddings, embeddings, pool=4, rng=make_rng(5, "rp"))
    assert (scores.top1, scores.top2, scores.top3) == (1.0, 1.0, 1.0)
    assert scores.mm_dist == 0.0


def test_r_precision_random_embeddings_approach_chance():
    rng = make_rng(6, "rp")
    text = rng.standard_normal((3000, 4))
    motion = rng.standard_normal((3000, 4))
    scores = r_precision_mm_dist(text, motion, pool=4, rng=make_rng(7, "rp"))
    assert scores.top1 == pytest.approx(0.25, abs=0.03)
    assert scores.top2 == pytest.approx(0.50, abs=0.03)
    assert scores.top3 == pytest.approx(0.75, abs=0.03)


def test_r_precision_pool_of_two_swapped_pairs():
    text = np.array([[0.0], [10.0]])
    motion = np.array([[9.0], [1.0]])
    scores = r_precision_mm_dist(text, motion, pool=2)
    assert scores.top1 == 0.0
    assert scores.top2 == 1.0
    assert scores.mm_dist == pytest.approx(9.0)


def test_r_precision_contracts():
    embeddings = np.eye(3)
    with pytest.raises(ContractError):
        r_precision_mm_dist(embeddings, embeddings, pool=4)
    with pytest.raises(ContractError):
        r_precision_mm_dist(embeddings, embeddings, pool=1)
    with pytest.raises(ShapeError):
        r_precision_mm_dist(embeddings, np.eye(4), pool=2)


def test_classify_by_kinetics_picks_the_nearest_reference():
    reference = np.array([[0.0, 0.0], [10.0, 10.0]])
    assert classify_by_kinetics(np.array([9.0, 8.0]), reference, ["still", "fast"]) == "fast"


# --- Beats -----------------------------------------------------------------------

def test_beat_align_score_offset_formula():
    print("🧪 Testing beat alignment")
    music = BeatSequence(np.array([1.0, 2.0, 3.0]))
    kin = BeatSequence(np.array([1.05, 2.05]))
    assert beat_align_score(kin, music, sigma=0.1) == pytest.approx(np.exp(-0.05 ** 2 / (2 * 0.1 ** 2)))
    assert beat_align_score(music, music, sigma=0.1) == pytest.approx(1.0)
    assert beat_align_score(BeatSequence(np.array([])), music) == 0.0
    with pytest.raises(ContractError):
        beat_align_score(kin, music, sigma=0.0)
    with pytest.raises(ContractError):
        beat_align_score(kin, BeatSequence(np.array([])))


def test_beat_sequence_validation():
    with pytest.raises(DataError):
        BeatSequence(np.array([1.0, 1.0]))
    with pytest.raises(DataError):
        BeatSequence(np.array([0.5, 2.0]), duration=1.0)


def test_v_shaped_speed_dip_gives_one_beat():
    speed = np.abs(np.arange(21) - 10.0)
    beats = beats_from_speed(speed, fps=20.0, smooth_window=5)
    np.testing.assert_allclose(beats.times, [0.5])
    assert beats.duration == pytest.approx(1.0)


def test_one_frame_halt_survives_smoothing():
    # the moving average turns the halt into a flat trough over frames 18..22
    speed = np.ones(40)
    speed[20] = 0.0
    beats = beats_from_speed(speed, fps=20.0, smooth_window=5)
    np.testing.assert_allclose(beats.times, [1.0])


def test_two_frame_halt_gives_one_beat_at_its_middle():
    speed = np.ones(40)
    speed[20:22] = 0.0
    beats = beats_from_speed(speed, fps=20.0, smooth_window=1)
    np.testing.assert_allclose(beats.times, [20.5 / 20.0])
    backward = beats_from_speed(speed[::-1], fps=20.0, smooth_window=1)
    np.testing.assert_allclose(backward.times, beats.duration - beats.times)


def test_constant_speed_has_no_beats():
    assert len(beats_from_speed(np.ones(12), fps=20.0)) == 0


def test_time_reversal_reverses_beats():
    speed = np.abs(make_rng(8, "speed").standard_normal(60)) + 0.1
    forward = beats_from_speed(speed, fps=20.0, smooth_window=3)
    backward = beats_from_speed(speed[::-1], fps=20.0, smooth_window=3)
    assert len(forward) > 0
    np.testing.assert_allclose(backward.times, np.sort(forward.duration - forward.times), atol=1e-12)


def test_beat_contracts():
    with pytest.raises(ContractError):
        beats_from_speed(np.ones(2), fps=20.0)
    with pytest.raises(ContractError):
        beats_from_speed(np.ones(10), fps=20.0, smooth_window=4)


def test_dance_halts_land_on_the_music_beats():
    print("🧪 Testing kinematic beats of a beat-locked dance")
    positions, _ = generate_motion(PROGRAMS["dance"], 80, make_rng(9, "dance"), fps=20.0, bpm=120.0, phase=0.2)
    kin = kinematic_beats(positions, smooth_window=5)
    music = BeatSequence(0.2 + 0.5 * np.arange(8))
    assert len(kin) >= 6
    assert beat_align_score(kin, music, sigma=0.15) > 0.95

    reversed_positions = JointPositions(positions=positions.positions[::-1], root_yaw=positions.root_yaw[::-1])
    reversed_kin = kinematic_beats(reversed_positions, smooth_window=5)
    np.testing.assert_allclose(reversed_kin.times, np.sort(kin.duration - kin.times), atol=1e-9)


# --- Motion features ----------------------------------------------------------------

def test_kinetic_features_of_a_constant_velocity_translation():
    print("🧪 Testing kinetic features")
    frames, speed = 12, 1.5
    rest = SKELETON.rest_pose()
    shift = (np.arange(frames) / 20.0 * speed)[:, None, None] * np.array([1.0, 0.0, 0.0])
    positions = JointPositions(positions=rest[None] + shift, root_yaw=np.zeros(frames))
    features = kinetic_features(positions).reshape(22, 3)
    np.testing.assert_allclose(features[:, 0], speed ** 2, rtol=1e-9)
    np.testing.assert_allclose(features[:, 1:], 0.0, atol=1e-12)
    assert kinetic_features(_pose()).shape == (66,)
    assert np.all(kinetic_features(_pose()) == 0.0)


def test_geometric_features_of_t_pose_and_raised_arms():
    print("🧪 Testing geometric features")
    names = [d.name for d in SKELETON.descriptors]
    t_pose = geometric_features(_pose())
    assert t_pose.shape == (len(names),)
    np.testing.assert_array_equal(t_pose, 0.0)

    arms_up = geometric_features(_pose(np.pi / 2))
    assert arms_up[names.index("left_hand_above_head")] == 1.0
    assert arms_up[names.index("right_hand_above_head")] == 1.0


def test_feature_matrix_contracts():
    matrix = feature_matrix([_pose(), _pose(0.3)], "geometric")
    assert matrix.shape == (2, len(SKELETON.descriptors))
    with pytest.raises(ContractError):
        feature_matrix([_pose()], "spectral")
    with pytest.raises(ContractError):
        feature_matrix([], "kinetic")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
