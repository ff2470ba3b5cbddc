"""
Procedural audio features and the audio feature file format.

Music features carry a pulse train on channel 0 (the configured amplitude
at every beat frame, zero elsewhere), the cosine and sine of the two-beat
phase on channels 1 and 2 (channel 1 follows the beat-locked motion
profile and reaches +-1 on the beats), and low-level noise on the remaining
channels. Speech features carry jittered syllable onsets on channel 0 and a
decaying envelope on channel 1.

Feature files are plain columnar text: a `# fps=<f> channels=<C_a>` header
line followed by one whitespace-separated row per frame.
"""

import os
import re
from typing import Optional

import numpy as np

from ..config import AUDIO_FEATURE_DIM, MOTION_FPS
from ..models.conditions import AUDIO_SOURCES, AudioCondition, SyntheticAudio
from ..motion.representation import resample
from ..utils.container import atomic_write_text
from ..utils.errors import ContractError, DataError, ShapeError
from ..utils.logging import get_logger
from ..utils.rng import make_rng

logger = get_logger("pipeline")

NOISE_LEVEL = 0.1
_HEADER = re.compile(r"#\s*fps=(?P<fps>[0-9.eE+-]+)\s+channels=(?P<channels>\d+)(?:\s+source=(?P<source>\w+))?")


def _frame_count(duration_s: float, fps: float) -> int:
    if duration_s <= 0 or fps <= 0:
        raise ContractError(f"duration and fps must be positive, got {duration_s} s at {fps} FPS")
    return int(round(duration_s * fps))


def _rng(seed, stream: str) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else make_rng(int(seed), stream)


def _pulse_frames(times: np.ndarray, fps: float, frames: int) -> np.ndarray:
    index = np.round(times * fps).astype(np.int64)
    return index[(index >= 0) & (index < frames)]


def synth_audio_features(
    bpm: float,
    duration_s: float,
    channels: int = AUDIO_FEATURE_DIM,
    seed=0,
    fps: float = MOTION_FPS,
    phase: float = 0.0,
    amplitude: float = 1.0,
) -> SyntheticAudio:
    """Beat-locked music features; beats fall at phase + k * 60 / bpm seconds"""
    if bpm <= 0:
        raise ContractError(f"bpm must be positive, got {bpm}")
    if channels < 3:
        raise ContractError(f"music features need at least 3 channels, got {channels}")
    frames = _frame_count(duration_s, fps)
    period = 60.0 / bpm
    cycle_start = float(phase)
    phase = cycle_start % period

    beats = phase + period * np.arange(int(np.ceil((duration_s - phase) / period)) + 1)
    beats = beats[beats < frames / fps]

    rng = _rng(seed, "audio")
    features = NOISE_LEVEL * rng.standard_normal((frames, channels))
    features[:, 0] = 0.0
    features[_pulse_frames(beats, fps, frames), 0] = amplitude
    angle = np.pi * (np.arange(frames) / fps - cycle_start) / period
    features[:, 1] = np.cos(angle)
    features[:, 2] = np.sin(angle)
    return SyntheticAudio(
        features=features,
        beat_times=beats,
        fps=fps,
        source="music",
        meta={"bpm": float(bpm), "phase": phase, "amplitude": float(amplitude)},
    )


def synth_speech_features(
    duration_s: float,
    channels: int = AUDIO_FEATURE_DIM,
    seed=0,
    fps: float = MOTION_FPS,
    syllable_rate: float = 4.0,
    jitter: float = 0.3,
    amplitude: float = 1.0,
) -> SyntheticAudio:
    """Speech-like features: irregular onsets at roughly `syllable_rate` per second"""
    if syllable_rate <= 0 or not 0 <= jitter < 1:
        raise ContractError(f"invalid syllable rate {syllable_rate} or jitter {jitter}")
    if channels < 2:
        raise ContractError(f"speech features need at least 2 channels, got {channels}")
    frames = _frame_count(duration_s, fps)
    rng = _rng(seed, "speech")
    mean_gap = 1.0 / syllable_rate
    gaps = mean_gap * (1.0 + jitter * rng.uniform(-1.0, 1.0, size=int(duration_s * syllable_rate / (1.0 - jitter)) + 2))
    onsets = np.cumsum(gaps) - gaps[0]
    onsets = onsets[onsets < frames / fps]
    # keep one onset per frame so the times stay strictly increasing after rounding
    pulse = np.unique(_pulse_frames(onsets, fps, frames))

    features = NOISE_LEVEL * rng.standard_normal((frames, channels))
    features[:, 0] = 0.0
    features[pulse, 0] = amplitude
    since = np.arange(frames) - pulse[np.maximum(np.searchsorted(pulse, np.arange(frames), side="right") - 1, 0)]
    features[:, 1] = np.where(np.arange(frames) >= pulse[0], np.exp(-since / (fps * mean_gap / 2.0)), 0.0)
    return SyntheticAudio(
        features=features,
        beat_times=pulse / fps,
        fps=fps,
        source="speech",
        meta={"syllable_rate": float(syllable_rate), "jitter": float(jitter), "amplitude": float(amplitude)},
    )


def beats_from_pulse(features: np.ndarray, fps: float = MOTION_FPS, threshold: float = 0.5) -> np.ndarray:
    """Times of the frames whose pulse channel exceeds `threshold`"""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError("audio features must be T_a x C_a", features.shape)
    return np.nonzero(features[:, 0] > threshold)[0] / fps


def downsample_audio(features: np.ndarray, src_fps: float, dst_fps: float = MOTION_FPS) -> np.ndarray:
    """Linear interpolation of a src_fps feature stream onto the dst_fps frame grid"""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError("audio features must be T_a x C_a", features.shape)
    if src_fps < dst_fps:
        raise ContractError(f"cannot downsample from {src_fps} FPS to a higher rate {dst_fps}")
    if features.shape[0] < 2:
        raise ContractError(f"audio stream needs at least 2 frames, got {features.shape[0]}")
    return resample(features, src_fps, dst_fps)


def write_audio_features(path: str, features: np.ndarray, fps: float = MOTION_FPS, source: str = "music") -> None:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError("audio features must be T_a x C_a", features.shape)
    lines = [f"# fps={fps:g} channels={features.shape[1]} source={source}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in features]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_audio_features(path: str, target_fps: Optional[float] = MOTION_FPS) -> AudioCondition:
    """Load a columnar feature file and bring it onto the target_fps frame grid"""
    if not os.path.exists(path):
        raise DataError(f"Audio feature file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    match = _HEADER.match(header)
    if not match:
        raise DataError(f"{path}: expected a '# fps=<f> channels=<C_a>' header, got '{header[:60]}'")
    fps = float(match.group("fps"))
    channels = int(match.group("channels"))
    source = match.group("source") or "music"
    if source not in AUDIO_SOURCES:
        raise DataError(f"{path}: unknown audio source '{source}'")

    try:
        features = np.loadtxt(path, comments="#", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise DataError(f"{path}: malformed feature rows ({e})") from e
    if features.shape[1] != channels:
        raise DataError(f"{path}: header declares {channels} channels, rows have {features.shape[1]}")

    if target_fps is not None and fps != target_fps:
        if features.shape[0] < 2:
            raise DataError(f"{path}: a {fps:g} FPS stream needs at least 2 frames to resample to {target_fps:g} FPS")
        logger.info(f"🎵 Resampling {path} from {fps:g} to {target_fps:g} FPS")
        if fps > target_fps:
            features = downsample_audio(features, fps, target_fps)
        else:
            features = resample(features, fps, target_fps)
        fps = target_fps
    return AudioCondition(features=features, source=source, fps=fps)
