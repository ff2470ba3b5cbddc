from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from ..config import MOTION_FPS
from ..utils.errors import DataError, ShapeError

AUDIO_SOURCES = ("music", "speech")


@dataclass
class TextCondition:
    """Tokenized text and its S x C_ctx embedding matrix"""
    text: str
    tokens: List[str]
    embedding: np.ndarray

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        if self.embedding.ndim != 2 or self.embedding.shape[0] != len(self.tokens):
            raise ShapeError("text embedding must have one row per token", self.embedding.shape)

    @property
    def context_dim(self) -> int:
        return self.embedding.shape[1]


@dataclass
class AudioCondition:
    """Per-frame audio features at the motion frame rate"""
    features: np.ndarray
    source: str = "music"
    fps: float = MOTION_FPS

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError("audio features must be T_a x C_a", self.features.shape)
        if self.source not in AUDIO_SOURCES:
            raise DataError(f"Unknown audio source '{self.source}', expected one of {AUDIO_SOURCES}")
        if not np.all(np.isfinite(self.features)):
            raise DataError("audio features contain non-finite values")

    @property
    def frames(self) -> int:
        return self.features.shape[0]

    @property
    def channels(self) -> int:
        return self.features.shape[1]


@dataclass
class SyntheticAudio:
    """Procedural audio features plus the beat (or onset) times that generated them"""
    features: np.ndarray
    beat_times: np.ndarray
    fps: float = MOTION_FPS
    source: str = "music"
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.beat_times = np.asarray(self.beat_times, dtype=np.float64)
        if self.beat_times.size > 1 and not np.all(np.diff(self.beat_times) > 0):
            raise DataError("beat times must be strictly increasing")

    @property
    def frames(self) -> int:
        return self.features.shape[0]

    def as_condition(self) -> AudioCondition:
        return AudioCondition(features=self.features, source=self.source, fps=self.fps)
