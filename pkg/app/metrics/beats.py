"""
Kinematic beats and the beat alignment score.

A kinematic beat is a local minimum of the smoothed mean joint speed, i.e. a
moment where the motion briefly halts. A flat-bottomed minimum counts once,
at the middle of its plateau. Speed uses central differences and the moving
average is centered, so reversing a motion in time reverses its beats.
"""

from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from ..config import BAS_SIGMA, BEAT_SMOOTH_WINDOW
from ..models.metrics import BeatSequence
from ..motion.skeleton import Skeleton
from ..utils.errors import ContractError
from .features import MotionLike, as_positions


def joint_speed(motion: MotionLike, skeleton: Optional[Skeleton] = None) -> np.ndarray:
    """Per-frame mean joint speed (m/s)"""
    positions = as_positions(motion, skeleton)
    velocity = np.gradient(positions.positions, axis=0) * positions.fps
    return np.linalg.norm(velocity, axis=-1).mean(axis=1)


def beats_from_speed(speed: np.ndarray, fps: float, smooth_window: int = BEAT_SMOOTH_WINDOW) -> BeatSequence:
    speed = np.asarray(speed, dtype=np.float64).reshape(-1)
    if speed.size < 3:
        raise ContractError(f"kinematic beats need at least 3 frames, got {speed.size}")
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ContractError(f"smoothing window must be a positive odd number, got {smooth_window}")
    smooth = uniform_filter1d(speed, size=smooth_window, mode="nearest")
    _, plateaus = find_peaks(-smooth, plateau_size=1)
    minima = 0.5 * (plateaus["left_edges"] + plateaus["right_edges"])
    return BeatSequence(times=minima / fps, duration=(speed.size - 1) / fps)


def kinematic_beats(motion: MotionLike, smooth_window: int = BEAT_SMOOTH_WINDOW,
                    skeleton: Optional[Skeleton] = None) -> BeatSequence:
    positions = as_positions(motion, skeleton)
    if positions.frames < 3:
        raise ContractError(f"kinematic beats need at least 3 frames, got {positions.frames}")
    return beats_from_speed(joint_speed(positions), positions.fps, smooth_window)


def beat_align_score(kin: BeatSequence, music: BeatSequence, sigma: float = BAS_SIGMA) -> float:
    """Mean over kinematic beats of exp(-d^2 / 2 sigma^2), d the distance to the nearest music beat"""
    if sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    if len(music) == 0:
        raise ContractError("music beat sequence is empty")
    if len(kin) == 0:
        return 0.0
    nearest = np.min(np.abs(kin.times[:, None] - music.times[None, :]), axis=1)
    return float(np.mean(np.exp(-nearest ** 2 / (2.0 * sigma ** 2))))
