from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..utils.errors import ContractError, DataError, ShapeError


@dataclass
class FeatureStats:
    """Mean, covariance (n-1 normalized, symmetrized) and sample count of a feature set"""
    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        dim = self.mean.shape[0]
        if self.cov.shape != (dim, dim):
            raise ShapeError("covariance must be d x d for a d-dim mean", self.mean.shape, self.cov.shape)
        if self.count < 2:
            raise ContractError(f"feature statistics need at least 2 samples, got {self.count}")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.cov))):
            raise DataError("feature statistics contain non-finite values")
        self.cov = 0.5 * (self.cov + self.cov.T)

    @classmethod
    def from_features(cls, features: np.ndarray) -> 'FeatureStats':
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ShapeError("features must be n x d", features.shape)
        if features.shape[0] < 2:
            raise ContractError(f"feature statistics need at least 2 samples, got {features.shape[0]}")
        return cls(mean=features.mean(axis=0), cov=np.cov(features, rowvar=False, ddof=1), count=features.shape[0])

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class BeatSequence:
    """Strictly increasing beat times in seconds"""
    times: np.ndarray
    duration: Optional[float] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise DataError("beat times must be strictly increasing")
        if self.times.size and (self.times[0] < 0 or (self.duration is not None and self.times[-1] > self.duration)):
            raise DataError("beat times must lie within the motion duration")

    def __len__(self) -> int:
        return self.times.size

    def to_dict(self) -> Dict[str, Any]:
        return {"times": self.times.tolist(), "duration": self.duration}
