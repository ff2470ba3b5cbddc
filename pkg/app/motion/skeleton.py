import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..config import SKELETON_PATH
from ..utils.errors import ConfigError

AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class PlaneTest:
    """Boolean pose descriptor: position[joint_a][axis] - position[joint_b][axis] > margin"""
    name: str
    joint_a: int
    joint_b: int
    axis: str
    margin: float = 0.0

    @property
    def axis_index(self) -> int:
        return AXES[self.axis]


@dataclass
class Skeleton:
    """Joint tree with rest offsets, contact joints and geometric descriptors"""
    name: str
    joint_names: List[str]
    parents: List[int]
    offsets: np.ndarray
    root_height: float
    contact_joints: List[int]
    descriptors: List[PlaneTest] = field(default_factory=list)

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        count = len(self.parents)
        if count < 2 or len(self.joint_names) != count:
            raise ConfigError("skeleton needs at least 2 joints with one name each")
        if self.offsets.shape != (count, 3):
            raise ConfigError(f"offsets must be {count} x 3, got {self.offsets.shape}")
        if not np.all(np.isfinite(self.offsets)):
            raise ConfigError("skeleton offsets must be finite")
        if self.parents[0] != -1:
            raise ConfigError("joint 0 must be the root (parent -1)")
        # parents listed before children: connected and acyclic by construction
        for joint, parent in enumerate(self.parents[1:], start=1):
            if not 0 <= parent < joint:
                raise ConfigError(f"joint {joint} has parent {parent}; parents must precede their children")
            if np.linalg.norm(self.offsets[joint]) == 0.0:
                raise ConfigError(f"joint {joint} has a zero-length bone")
        if len(self.contact_joints) != 4 or any(not 0 <= j < count for j in self.contact_joints):
            raise ConfigError("exactly 4 valid contact joints (heel, toe, heel, toe) are required")
        for test in self.descriptors:
            if test.axis not in AXES:
                raise ConfigError(f"descriptor '{test.name}' has unknown axis '{test.axis}'")
            if not (0 <= test.joint_a < count and 0 <= test.joint_b < count):
                raise ConfigError(f"descriptor '{test.name}' references a missing joint")

    @property
    def joint_count(self) -> int:
        return len(self.parents)

    def children(self, joint: int) -> List[int]:
        return [j for j, p in enumerate(self.parents) if p == joint]

    def bone_lengths(self) -> np.ndarray:
        """Rest length of the bone ending at each joint (0 for the root)"""
        lengths = np.linalg.norm(self.offsets, axis=1)
        lengths[0] = 0.0
        return lengths

    def rest_pose(self) -> np.ndarray:
        """J x 3 global positions of the T-pose, root at (0, root_height, 0)"""
        pose = np.zeros((self.joint_count, 3))
        pose[0] = (0.0, self.root_height, 0.0)
        for joint in range(1, self.joint_count):
            pose[joint] = pose[self.parents[joint]] + self.offsets[joint]
        return pose

    def joint_index(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise ConfigError(f"Unknown joint '{name}'") from None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Skeleton':
        try:
            joints = data["joints"]
            return cls(
                name=data.get("name", "skeleton"),
                joint_names=[j["name"] for j in joints],
                parents=[int(j["parent"]) for j in joints],
                offsets=np.array([j["offset"] for j in joints], dtype=np.float64),
                root_height=float(data.get("root_height", 0.0)),
                contact_joints=[int(j) for j in data["contact_joints"]],
                descriptors=[PlaneTest(**d) for d in data.get("descriptors", [])],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed skeleton description: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "root_height": self.root_height,
            "joints": [
                {"name": n, "parent": p, "offset": o.tolist()}
                for n, p, o in zip(self.joint_names, self.parents, self.offsets)
            ],
            "contact_joints": list(self.contact_joints),
            "descriptors": [
                {"name": d.name, "joint_a": d.joint_a, "joint_b": d.joint_b, "axis": d.axis, "margin": d.margin}
                for d in self.descriptors
            ],
        }

    @classmethod
    def from_yaml(cls, path: str) -> 'Skeleton':
        if not os.path.exists(path):
            raise ConfigError(f"Skeleton file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(yaml.safe_load(f) or {})


@lru_cache(maxsize=8)
def _load_cached(path: str) -> Skeleton:
    return Skeleton.from_yaml(path)


def load_skeleton(path: Optional[str] = None) -> Skeleton:
    """Skeleton from a YAML file; the bundled SMPL22 description by default"""
    return _load_cached(os.path.abspath(path or SKELETON_PATH))
