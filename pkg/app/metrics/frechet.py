"""
Frechet distance between two Gaussian feature summaries.

    d^2 = |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))

The trace of the cross term is computed as tr((A S_b A)^(1/2)) with
A = S_a^(1/2), so every square root is of a symmetric PSD matrix and can go
through eigh with negative eigenvalues clamped to zero.
"""

import numpy as np
from scipy import linalg

from ..models.metrics import FeatureStats
from ..utils.errors import DataError, ShapeError


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric matrix, negative eigenvalues clamped at 0"""
    sym = 0.5 * (matrix + matrix.T)
    values, vectors = linalg.eigh(sym)
    root = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * root) @ vectors.T


def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
    if a.dim != b.dim:
        raise ShapeError("feature statistics have different dimensions", a.mean.shape, b.mean.shape)
    for stats in (a, b):
        if not (np.all(np.isfinite(stats.mean)) and np.all(np.isfinite(stats.cov))):
            raise DataError("feature statistics contain non-finite values")

    diff = a.mean - b.mean
    root_a = psd_sqrt(a.cov)
    cross = psd_sqrt(root_a @ b.cov @ root_a)
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return max(value, 0.0)


def frechet_from_features(a: np.ndarray, b: np.ndarray) -> float:
    return frechet_distance(FeatureStats.from_features(a), FeatureStats.from_features(b))
