from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from ..config import DIVERSITY_PAIRS
from ..utils.errors import ContractError, ShapeError
from ..utils.rng import make_rng


def _as_matrix(features) -> np.ndarray:
    matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError("features must be n x d", matrix.shape)
    return matrix


def diversity(features, pairs: int = DIVERSITY_PAIRS, rng: Optional[np.random.Generator] = None) -> float:
    """
    Mean Euclidean distance over distinct pairs.

    All pairs are used when there are no more than `pairs` of them; otherwise
    `pairs` distinct index pairs are drawn uniformly.
    """
    matrix = _as_matrix(features)
    count = matrix.shape[0]
    if count < 2:
        raise ContractError(f"diversity needs at least 2 items, got {count}")
    total = count * (count - 1) // 2
    if total <= pairs:
        return float(np.mean(pdist(matrix)))

    rng = rng if rng is not None else make_rng(0, "diversity")
    picks = rng.choice(total, size=pairs, replace=False)
    index = np.array(list(combinations(range(count), 2)))[picks]
    return float(np.mean(np.linalg.norm(matrix[index[:, 0]] - matrix[index[:, 1]], axis=1)))


def multimodality(groups: Sequence) -> float:
    """Mean within-group pairwise distance, averaged over groups"""
    if not groups:
        raise ContractError("multimodality needs at least one group")
    scores = []
    for index, group in enumerate(groups):
        matrix = _as_matrix(group)
        if matrix.shape[0] < 2:
            raise ContractError(f"group {index} has {matrix.shape[0]} samples, at least 2 are required")
        scores.append(np.mean(pdist(matrix)))
    return float(np.mean(scores))
