"""
Hand-crafted motion features for FID and diversity.

Kinetic: per joint and axis, the mean squared global velocity (66 values).
Geometric: per configured plane test, the fraction of frames where it holds.
The geometric set is a simplified descriptor list, not comparable to
published FID_g numbers.
"""

from typing import Optional, Sequence, Union

import numpy as np

from ..models.motion import JointPositions, MotionSeq
from ..motion.representation import decode, resample_fps, root_local_positions
from ..motion.skeleton import Skeleton, load_skeleton
from ..utils.errors import ContractError

MotionLike = Union[MotionSeq, JointPositions]


def as_positions(motion: MotionLike, skeleton: Optional[Skeleton] = None,
                 upsample_fps: Optional[float] = None) -> JointPositions:
    positions = decode(motion, skeleton) if isinstance(motion, MotionSeq) else motion
    if upsample_fps is not None and upsample_fps != positions.fps:
        positions = resample_fps(positions, positions.fps, upsample_fps)
    return positions


def kinetic_features(motion: MotionLike, skeleton: Optional[Skeleton] = None,
                     upsample_fps: Optional[float] = None) -> np.ndarray:
    positions = as_positions(motion, skeleton, upsample_fps)
    if positions.frames < 2:
        raise ContractError(f"kinetic features need at least 2 frames, got {positions.frames}")
    velocity = np.diff(positions.positions, axis=0) * positions.fps
    return np.mean(velocity ** 2, axis=0).reshape(-1)


def geometric_features(motion: MotionLike, skeleton: Optional[Skeleton] = None,
                       upsample_fps: Optional[float] = None) -> np.ndarray:
    skeleton = skeleton or load_skeleton()
    if not skeleton.descriptors:
        return np.zeros(0)
    local = root_local_positions(as_positions(motion, skeleton, upsample_fps))
    flags = np.stack(
        [
            local[:, test.joint_a, test.axis_index] - local[:, test.joint_b, test.axis_index] > test.margin
            for test in skeleton.descriptors
        ],
        axis=1,
    )
    return flags.mean(axis=0)


def feature_matrix(motions: Sequence[MotionLike], kind: str = "kinetic", skeleton: Optional[Skeleton] = None,
                   upsample_fps: Optional[float] = None) -> np.ndarray:
    extractors = {"kinetic": kinetic_features, "geometric": geometric_features}
    if kind not in extractors:
        raise ContractError(f"Unknown feature kind '{kind}', expected one of {sorted(extractors)}")
    if not motions:
        raise ContractError("no motions to extract features from")
    return np.stack([extractors[kind](m, skeleton, upsample_fps) for m in motions])
