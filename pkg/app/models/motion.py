from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..config import FEATURE_DIM, JOINT_COUNT, MOTION_FPS
from ..utils.errors import DataError, ShapeError


@dataclass(frozen=True)
class FeatureLayout:
    """Channel boundaries of the 263-wide per-frame representation (4 | 63 | 126 | 66 | 4)"""
    joint_count: int = JOINT_COUNT

    @property
    def root(self) -> slice:
        # angular velocity (yaw), linear velocity x, linear velocity z, root height
        return slice(0, 4)

    @property
    def positions(self) -> slice:
        start = self.root.stop
        return slice(start, start + 3 * (self.joint_count - 1))

    @property
    def rotations(self) -> slice:
        start = self.positions.stop
        return slice(start, start + 6 * (self.joint_count - 1))

    @property
    def velocities(self) -> slice:
        start = self.rotations.stop
        return slice(start, start + 3 * self.joint_count)

    @property
    def contacts(self) -> slice:
        start = self.velocities.stop
        return slice(start, start + 4)

    @property
    def width(self) -> int:
        return self.contacts.stop


LAYOUT = FeatureLayout()
assert LAYOUT.width == FEATURE_DIM


@dataclass
class MotionSeq:
    """T x 263 motion features at a fixed frame rate"""
    features: np.ndarray
    fps: float = MOTION_FPS

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != LAYOUT.width:
            raise ShapeError(f"motion features must be T x {LAYOUT.width}", self.features.shape)
        if not np.all(np.isfinite(self.features)):
            raise DataError("motion features contain non-finite values")
        contacts = self.features[:, LAYOUT.contacts]
        if not np.all((contacts == 0.0) | (contacts == 1.0)):
            raise DataError("foot-contact channels must be binary")

    @classmethod
    def from_prediction(cls, features: np.ndarray, fps: float = MOTION_FPS) -> 'MotionSeq':
        """Wrap raw model output, thresholding the contact channels at 0.5"""
        features = np.array(features, dtype=np.float64)
        features[:, LAYOUT.contacts] = (features[:, LAYOUT.contacts] > 0.5).astype(np.float64)
        return cls(features=features, fps=fps)

    @property
    def frames(self) -> int:
        return self.features.shape[0]

    @property
    def root_height(self) -> np.ndarray:
        return self.features[:, 3]

    @property
    def contacts(self) -> np.ndarray:
        return self.features[:, LAYOUT.contacts]

    def to_dict(self) -> Dict[str, Any]:
        return {"fps": self.fps, "frames": self.frames, "features": self.features.tolist()}


@dataclass
class JointPositions:
    """Global joint positions (T x J x 3, meters, y up) plus the per-frame root yaw"""
    positions: np.ndarray
    root_yaw: np.ndarray
    fps: float = MOTION_FPS

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.root_yaw = np.asarray(self.root_yaw, dtype=np.float64)
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise ShapeError("joint positions must be T x J x 3", self.positions.shape)
        if self.root_yaw.shape != (self.positions.shape[0],):
            raise ShapeError("root yaw must have one value per frame", self.root_yaw.shape, self.positions.shape[:1])
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.root_yaw))):
            raise DataError("joint positions contain non-finite values")

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    @property
    def joint_count(self) -> int:
        return self.positions.shape[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fps": self.fps,
            "frames": self.frames,
            "joint_count": self.joint_count,
            "root_yaw": self.root_yaw.tolist(),
            "positions": self.positions.tolist(),
        }
