"""
Label-driven procedural motions.

Each text label maps to an oscillator program over a few chain-top joints
(hips, shoulders) plus optional forward travel. Beat-locked programs drive
every moving joint with the same profile cos(pi * (t - phase) / period), so
all joints halt together exactly at the beat times and nowhere else.
"""

import hashlib
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from ..config import MOTION_FPS
from ..models.motion import JointPositions
from ..utils.errors import ContractError
from ..utils.rng import make_rng
from .representation import forward_kinematics
from .skeleton import Skeleton, load_skeleton

_X = np.array([1.0, 0.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class MotionProgram:
    name: str
    leg_swing: float  # hip pitch amplitude, rad
    arm_raise: float  # mean shoulder elevation, rad (0 = T-pose, negative lowers the arms)
    arm_swing: float  # shoulder oscillation amplitude, rad
    frequency: float  # Hz; unused by beat-locked programs
    walk_speed: float = 0.0  # m/s along the heading
    beat_locked: bool = False


PROGRAMS: Dict[str, MotionProgram] = {
    "walk": MotionProgram("walk", leg_swing=0.45, arm_raise=-1.2, arm_swing=0.35, frequency=1.0, walk_speed=1.2),
    "wave": MotionProgram("wave", leg_swing=0.0, arm_raise=1.0, arm_swing=0.5, frequency=1.5),
    "dance": MotionProgram("dance", leg_swing=0.35, arm_raise=0.3, arm_swing=0.9, frequency=0.0, beat_locked=True),
}

_KEYWORDS = (("dance", "dance"), ("beat", "dance"), ("walk", "walk"), ("wave", "wave"), ("arm", "wave"))


def program_for(label: str) -> MotionProgram:
    """Keyword lookup; any other label gets a stable pseudo-random program of its own"""
    lowered = label.lower()
    for keyword, name in _KEYWORDS:
        if keyword in lowered:
            return PROGRAMS[name]
    digest = int.from_bytes(hashlib.sha256(lowered.encode("utf-8")).digest()[:8], "little")
    rng = make_rng(digest, "program")
    return MotionProgram(
        name=f"custom:{lowered}",
        leg_swing=float(rng.uniform(0.1, 0.5)),
        arm_raise=float(rng.uniform(-1.2, 1.0)),
        arm_swing=float(rng.uniform(0.1, 0.8)),
        frequency=float(rng.uniform(0.5, 2.0)),
        walk_speed=float(rng.choice([0.0, rng.uniform(0.3, 1.0)])),
    )


def beat_profile(times: np.ndarray, period: float, phase: float) -> np.ndarray:
    """cos(pi * (t - phase) / period): stationary exactly at phase + k * period"""
    return np.cos(np.pi * (times - phase) / period)


def _compose(outer_axis: np.ndarray, outer: np.ndarray, inner_axis: np.ndarray, inner: np.ndarray) -> np.ndarray:
    rotation = Rotation.from_rotvec(outer[:, None] * outer_axis) * Rotation.from_rotvec(inner[:, None] * inner_axis)
    return rotation.as_rotvec()


def generate_motion(
    program: MotionProgram,
    frames: int,
    rng: np.random.Generator,
    fps: float = MOTION_FPS,
    bpm: Optional[float] = None,
    phase: float = 0.0,
    skeleton: Optional[Skeleton] = None,
) -> Tuple[JointPositions, Dict[str, Any]]:
    """Pose one sequence of `program` with per-sequence jitter; returns positions and the drawn parameters"""
    skeleton = skeleton or load_skeleton()
    if frames < 2:
        raise ContractError(f"a generated motion needs at least 2 frames, got {frames}")
    if program.beat_locked and (bpm is None or bpm <= 0):
        raise ContractError(f"beat-locked program '{program.name}' needs a positive bpm")

    scale = rng.uniform(0.85, 1.15)
    program = replace(
        program,
        leg_swing=program.leg_swing * scale,
        arm_swing=program.arm_swing * scale,
        frequency=program.frequency * rng.uniform(0.9, 1.1),
    )
    heading = rng.uniform(-np.pi, np.pi)
    start = rng.uniform(-1.0, 1.0, size=2)
    times = np.arange(frames) / fps

    if program.beat_locked:
        profile = beat_profile(times, 60.0 / bpm, phase)
        swing = profile
        stride = profile
    else:
        offset = rng.uniform(0.0, 2.0 * np.pi)
        swing = np.sin(2.0 * np.pi * program.frequency * times + offset)
        stride = swing

    index = {name: skeleton.joint_index(name) for name in (
        "left_hip", "right_hip", "left_knee", "right_knee", "left_shoulder", "right_shoulder")}
    rotations = np.zeros((frames, skeleton.joint_count, 3))
    rotations[:, index["left_hip"]] = (program.leg_swing * stride)[:, None] * _X
    rotations[:, index["right_hip"]] = (-program.leg_swing * stride)[:, None] * _X

    if program.walk_speed > 0 and not program.beat_locked:
        # arms hang and swing fore and aft against the legs
        knee = 0.6 * program.leg_swing
        rotations[:, index["left_knee"]] = (knee * np.maximum(stride, 0.0))[:, None] * _X
        rotations[:, index["right_knee"]] = (knee * np.maximum(-stride, 0.0))[:, None] * _X
        lowered = np.full(frames, program.arm_raise)
        rotations[:, index["left_shoulder"]] = _compose(_X, -program.arm_swing * stride, _Z, lowered)
        rotations[:, index["right_shoulder"]] = _compose(_X, program.arm_swing * stride, _Z, -lowered)
    else:
        elevation = program.arm_raise + program.arm_swing * swing
        rotations[:, index["left_shoulder"]] = elevation[:, None] * _Z
        rotations[:, index["right_shoulder"]] = -elevation[:, None] * _Z

    forward = np.array([np.sin(heading), 0.0, np.cos(heading)])
    root = np.zeros((frames, 3))
    root[:, 0] = start[0]
    root[:, 1] = skeleton.root_height
    root[:, 2] = start[1]
    root += (program.walk_speed * times)[:, None] * forward

    positions = forward_kinematics(skeleton, rotations, root, np.full(frames, heading), fps=fps)
    params = {
        "program": program.name,
        "heading": float(heading),
        "scale": float(scale),
        "frequency": float(program.frequency),
    }
    if program.beat_locked:
        params.update({"bpm": float(bpm), "phase": float(phase)})
    return positions, params
