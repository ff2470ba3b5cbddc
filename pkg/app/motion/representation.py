"""
The 263-wide per-frame motion representation.

    [0]        root angular velocity about y (rad/s)
    [1:3]      root linear velocity x, z in the root-local frame (m/s)
    [3]        root height (m)
    [4:67]     positions of joints 1..21 relative to the root's ground projection, root-local frame
    [67:193]   6D rotation of each non-root bone (first two matrix columns)
    [193:259]  velocities of all 22 joints in the root-local frame (m/s)
    [259:263]  binary foot contacts (heel, toe, heel, toe)

Velocities are backward differences scaled by fps; row 0 repeats row 1.
Decoding starts the root at x = z = 0 with zero yaw.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..config import CONTACT_THRESHOLD, MOTION_FPS
from ..models.motion import LAYOUT, JointPositions, MotionSeq
from ..utils.errors import ContractError, DataError, ShapeError
from .skeleton import Skeleton, load_skeleton

_AXES = ("x", "y", "z")


def wrap_angle(angle: np.ndarray) -> np.ndarray:
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


def yaw_matrices(yaw: np.ndarray) -> np.ndarray:
    """T x 3 x 3 rotations about +y"""
    return Rotation.from_euler("y", np.asarray(yaw, dtype=np.float64).reshape(-1)).as_matrix()


def _rotate(matrices: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Apply per-frame matrices (T x 3 x 3) to T x ... x 3 vectors"""
    return np.einsum("tij,t...j->t...i", matrices, vectors)


def _backward_diff(values: np.ndarray, fps: float) -> np.ndarray:
    diff = np.diff(values, axis=0) * fps
    return np.concatenate([diff[:1], diff], axis=0)


def _minimal_rotvecs(rest: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Axis-angle of the smallest rotation taking each rest direction onto the current one"""
    rest_dir = rest / np.linalg.norm(rest, axis=-1, keepdims=True)
    norms = np.linalg.norm(current, axis=-1, keepdims=True)
    cur_dir = np.divide(current, norms, out=np.zeros_like(current), where=norms > 1e-12)
    rest_dir = np.broadcast_to(rest_dir, cur_dir.shape)

    axis = np.cross(rest_dir, cur_dir)
    sin = np.linalg.norm(axis, axis=-1)
    cos = np.einsum("...i,...i->...", rest_dir, cur_dir)
    angle = np.arctan2(sin, cos)
    rotvec = np.zeros_like(cur_dir)

    regular = sin > 1e-9
    rotvec[regular] = axis[regular] / sin[regular][:, None] * angle[regular][:, None]

    # antiparallel: half turn about any axis orthogonal to the rest direction
    flipped = (~regular) & (cos < 0.0)
    if np.any(flipped):
        ref = rest_dir[flipped]
        helper = np.eye(3)[np.argmin(np.abs(ref), axis=-1)]
        ortho = np.cross(ref, helper)
        ortho /= np.linalg.norm(ortho, axis=-1, keepdims=True)
        rotvec[flipped] = ortho * np.pi
    return rotvec


def rotation_6d(rotvecs: np.ndarray) -> np.ndarray:
    """... x 3 axis-angle -> ... x 6 (first column, then second column)"""
    lead = rotvecs.shape[:-1]
    mats = Rotation.from_rotvec(rotvecs.reshape(-1, 3)).as_matrix()
    six = np.concatenate([mats[:, :, 0], mats[:, :, 1]], axis=-1)
    return six.reshape(*lead, 6)


def _check_positions(positions: JointPositions, skeleton: Skeleton) -> None:
    if positions.joint_count != skeleton.joint_count:
        raise ShapeError(f"expected {skeleton.joint_count} joints", positions.positions.shape)
    if positions.frames < 2:
        raise ContractError(f"at least 2 frames are required, got {positions.frames}")


def foot_contacts(
    positions: JointPositions,
    threshold: float = CONTACT_THRESHOLD,
    skeleton: Optional[Skeleton] = None,
) -> np.ndarray:
    """T x 4 binary contacts: 1 where the squared per-frame displacement is below threshold"""
    skeleton = skeleton or load_skeleton()
    _check_positions(positions, skeleton)
    feet = positions.positions[:, skeleton.contact_joints]
    step = np.diff(feet, axis=0)
    step = np.concatenate([step[:1], step], axis=0)
    squared = np.sum(step * step, axis=-1)
    return (squared < threshold).astype(np.float64)


def encode(
    positions: JointPositions,
    skeleton: Optional[Skeleton] = None,
    contact_threshold: float = CONTACT_THRESHOLD,
) -> MotionSeq:
    """Global joint positions + root yaw -> T x 263 features"""
    skeleton = skeleton or load_skeleton()
    _check_positions(positions, skeleton)
    if skeleton.joint_count != LAYOUT.joint_count:
        raise ShapeError(f"the feature layout is built for {LAYOUT.joint_count} joints", skeleton.offsets.shape)

    fps = positions.fps
    pos = positions.positions
    yaw = positions.root_yaw
    frames = positions.frames
    inverse = yaw_matrices(-yaw)

    yaw_rate = wrap_angle(np.diff(yaw)) * fps
    yaw_rate = np.concatenate([yaw_rate[:1], yaw_rate])

    root = pos[:, 0]
    ground = root * np.array([1.0, 0.0, 1.0])
    root_vel = _rotate(inverse, _backward_diff(ground, fps))

    local = _rotate(inverse, pos - ground[:, None, :])

    parents = np.array(skeleton.parents[1:])
    bones = local[:, 1:] - local[:, parents]
    rot6d = rotation_6d(_minimal_rotvecs(skeleton.offsets[1:], bones))

    velocities = _rotate(inverse, _backward_diff(pos, fps))
    contacts = foot_contacts(positions, contact_threshold, skeleton)

    features = np.concatenate(
        [
            yaw_rate[:, None],
            root_vel[:, [0]],
            root_vel[:, [2]],
            root[:, [1]],
            local[:, 1:].reshape(frames, -1),
            rot6d.reshape(frames, -1),
            velocities.reshape(frames, -1),
            contacts,
        ],
        axis=1,
    )
    return MotionSeq(features=features, fps=fps)


def decode(motion: MotionSeq, skeleton: Optional[Skeleton] = None) -> JointPositions:
    """T x 263 features -> global joint positions, integrating root yaw and velocity"""
    skeleton = skeleton or load_skeleton()
    if skeleton.joint_count != LAYOUT.joint_count:
        raise ShapeError(f"the feature layout is built for {LAYOUT.joint_count} joints", skeleton.offsets.shape)

    fps = motion.fps
    feats = motion.features
    frames = motion.frames

    rate = feats[:, 0].copy()
    rate[0] = 0.0
    yaw = np.cumsum(rate / fps)
    rotation = yaw_matrices(yaw)

    local_vel = np.zeros((frames, 3))
    local_vel[:, 0] = feats[:, 1]
    local_vel[:, 2] = feats[:, 2]
    step = _rotate(rotation, local_vel) / fps
    step[0] = 0.0
    ground = np.cumsum(step, axis=0)

    local = np.zeros((frames, skeleton.joint_count, 3))
    local[:, 0, 1] = feats[:, 3]
    local[:, 1:] = feats[:, LAYOUT.positions].reshape(frames, -1, 3)
    glob = _rotate(rotation, local) + ground[:, None, :]
    return JointPositions(positions=glob, root_yaw=yaw, fps=fps)


def forward_kinematics(
    skeleton: Skeleton,
    local_rotations: np.ndarray,
    root_positions: np.ndarray,
    root_yaw: np.ndarray,
    fps: float = MOTION_FPS,
) -> JointPositions:
    """
    Pose a skeleton from per-joint local rotations.

    local_rotations: T x J x 3 axis-angle, each relative to the parent frame
    root_positions:  T x 3 global root positions
    root_yaw:        T heading angles, applied on top of the root's local rotation
    """
    local_rotations = np.asarray(local_rotations, dtype=np.float64)
    root_positions = np.asarray(root_positions, dtype=np.float64)
    root_yaw = np.asarray(root_yaw, dtype=np.float64)
    frames = root_positions.shape[0]
    if local_rotations.shape != (frames, skeleton.joint_count, 3):
        raise ShapeError("local rotations must be T x J x 3", local_rotations.shape)
    if root_positions.shape != (frames, 3) or root_yaw.shape != (frames,):
        raise ShapeError("root positions must be T x 3 and yaw T", root_positions.shape, root_yaw.shape)

    local = Rotation.from_rotvec(local_rotations.reshape(-1, 3)).as_matrix()
    local = local.reshape(frames, skeleton.joint_count, 3, 3)
    world_rot = np.zeros_like(local)
    world_pos = np.zeros((frames, skeleton.joint_count, 3))
    world_rot[:, 0] = yaw_matrices(root_yaw) @ local[:, 0]
    world_pos[:, 0] = root_positions
    for joint in range(1, skeleton.joint_count):
        parent = skeleton.parents[joint]
        world_pos[:, joint] = world_pos[:, parent] + world_rot[:, parent] @ skeleton.offsets[joint]
        world_rot[:, joint] = world_rot[:, parent] @ local[:, joint]
    return JointPositions(positions=world_pos, root_yaw=root_yaw, fps=fps)


def resample(values: np.ndarray, src_fps: float, dst_fps: float) -> np.ndarray:
    """Linear interpolation of a T x ... array onto a new frame grid, both endpoints kept"""
    if src_fps <= 0 or dst_fps <= 0:
        raise ContractError(f"frame rates must be positive, got {src_fps} -> {dst_fps}")
    values = np.asarray(values, dtype=np.float64)
    frames = values.shape[0]
    if frames < 2:
        raise ContractError(f"resampling needs at least 2 frames, got {frames}")
    if src_fps == dst_fps:
        return values.copy()
    span = frames - 1
    count = int(round(span * dst_fps / src_fps)) + 1
    grid = np.linspace(0.0, span, count)
    source = np.arange(frames, dtype=np.float64)
    flat = values.reshape(frames, -1)
    out = np.stack([np.interp(grid, source, flat[:, c]) for c in range(flat.shape[1])], axis=1)
    return out.reshape(count, *values.shape[1:])


def resample_fps(positions: JointPositions, src_fps: float, dst_fps: float) -> JointPositions:
    """Resample joint positions and (unwrapped) root yaw to dst_fps"""
    new_positions = resample(positions.positions, src_fps, dst_fps)
    new_yaw = resample(np.unwrap(positions.root_yaw), src_fps, dst_fps)
    return JointPositions(positions=new_positions, root_yaw=new_yaw, fps=dst_fps)


def bone_length_drift(positions: JointPositions, skeleton: Optional[Skeleton] = None) -> float:
    """Largest relative deviation of any bone length from its rest length"""
    skeleton = skeleton or load_skeleton()
    _check_positions(positions, skeleton)
    parents = np.array(skeleton.parents[1:])
    bones = positions.positions[:, 1:] - positions.positions[:, parents]
    lengths = np.linalg.norm(bones, axis=-1)
    rest = skeleton.bone_lengths()[1:]
    return float(np.max(np.abs(lengths - rest) / rest))


def root_local_positions(positions: JointPositions) -> np.ndarray:
    """T x J x 3 positions relative to the root's ground projection, heading removed"""
    pos = positions.positions
    ground = pos[:, 0] * np.array([1.0, 0.0, 1.0])
    return _rotate(yaw_matrices(-positions.root_yaw), pos - ground[:, None, :])


def feature_channel_names(skeleton: Optional[Skeleton] = None) -> List[str]:
    skeleton = skeleton or load_skeleton()
    names = ["root_yaw_vel", "root_vel_x", "root_vel_z", "root_height"]
    joints = skeleton.joint_names
    names += [f"{j}_pos_{a}" for j in joints[1:] for a in _AXES]
    names += [f"{j}_rot6d_{k}" for j in joints[1:] for k in range(6)]
    names += [f"{j}_vel_{a}" for j in joints for a in _AXES]
    names += [f"{joints[j]}_contact_{k}" for k, j in enumerate(skeleton.contact_joints)]
    return names


@dataclass
class FeatureNormalizer:
    """Per-channel standardization fitted on a dataset and stored with the checkpoint"""
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if self.mean.shape != (LAYOUT.width,) or self.std.shape != (LAYOUT.width,):
            raise ShapeError(f"normalizer statistics must have {LAYOUT.width} channels", self.mean.shape, self.std.shape)
        if np.any(self.std <= 0) or not np.all(np.isfinite(self.mean)):
            raise DataError("normalizer needs finite means and positive deviations")

    @classmethod
    def fit(cls, motions: List[MotionSeq], floor: float = 1e-2) -> 'FeatureNormalizer':
        if not motions:
            raise ContractError("cannot fit a normalizer on an empty dataset")
        stacked = np.concatenate([m.features for m in motions], axis=0)
        return cls(mean=stacked.mean(axis=0), std=np.maximum(stacked.std(axis=0), floor))

    @classmethod
    def identity(cls) -> 'FeatureNormalizer':
        return cls(mean=np.zeros(LAYOUT.width), std=np.ones(LAYOUT.width))

    def normalize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) * self.std + self.mean

    def to_arrays(self, prefix: str = "normalizer.") -> Dict[str, np.ndarray]:
        return {f"{prefix}mean": self.mean, f"{prefix}std": self.std}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], prefix: str = "normalizer.") -> 'FeatureNormalizer':
        try:
            return cls(mean=arrays[f"{prefix}mean"], std=arrays[f"{prefix}std"])
        except KeyError as e:
            raise DataError(f"checkpoint has no normalizer entry {e}") from e
