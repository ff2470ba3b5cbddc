import csv
import io
import json
from typing import Any, Dict, Optional, Tuple

from ..models.motion import LAYOUT, JointPositions, MotionSeq
from ..utils.container import MOTION_MAGIC, atomic_write_text, read_container, write_container
from ..utils.errors import DataError
from ..utils.logging import motion_logger
from .representation import feature_channel_names
from .skeleton import Skeleton, load_skeleton


def save_motion(path: str, motion: MotionSeq, config_hash: str = "", seed: Optional[int] = None,
                meta: Optional[Dict[str, Any]] = None) -> None:
    """Write a motion container: header (fps, joint_count, frames) + T x 263 float64 matrix"""
    header_meta = {"fps": motion.fps, "joint_count": LAYOUT.joint_count, "frames": motion.frames}
    header_meta.update(meta or {})
    write_container(path, MOTION_MAGIC, {"features": motion.features}, kind="motion",
                    config_hash=config_hash, seed=seed, meta=header_meta)
    motion_logger.info(f"💾 Saved motion ({motion.frames} frames) to {path}")


def load_motion(path: str) -> Tuple[MotionSeq, Dict[str, Any]]:
    header, arrays = read_container(path, MOTION_MAGIC)
    if header.get("kind") != "motion" or "features" not in arrays:
        raise DataError(f"{path} does not hold a motion sequence")
    fps = header.get("meta", {}).get("fps")
    if fps is None:
        raise DataError(f"{path} has no fps in its header")
    return MotionSeq(features=arrays["features"], fps=float(fps)), header


def positions_document(positions: JointPositions, skeleton: Optional[Skeleton] = None) -> Dict[str, Any]:
    skeleton = skeleton or load_skeleton()
    document = positions.to_dict()
    document["skeleton"] = {"name": skeleton.name, "joints": skeleton.joint_names, "parents": skeleton.parents}
    return document


def export_positions_json(path: str, positions: JointPositions, skeleton: Optional[Skeleton] = None) -> None:
    """Decoded joint positions as JSON for external viewers"""
    atomic_write_text(path, json.dumps(positions_document(positions, skeleton)))
    motion_logger.info(f"📤 Exported {positions.frames} frames of joint positions to {path}")


def export_features_csv(path: str, motion: MotionSeq, skeleton: Optional[Skeleton] = None) -> None:
    """One row per frame, one named column per feature channel"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["frame"] + feature_channel_names(skeleton))
    for index, row in enumerate(motion.features):
        writer.writerow([index] + [repr(float(v)) for v in row])
    atomic_write_text(path, buffer.getvalue())
    motion_logger.info(f"📤 Exported {motion.frames} feature rows to {path}")
