from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..config import R_PRECISION_POOL
from ..utils.errors import ContractError, ShapeError
from ..utils.rng import make_rng


@dataclass
class RetrievalScores:
    top1: float
    top2: float
    top3: float
    mm_dist: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def r_precision_mm_dist(text_emb: np.ndarray, motion_emb: np.ndarray, pool: int = R_PRECISION_POOL,
                        rng: Optional[np.random.Generator] = None) -> RetrievalScores:
    """
    Top-k text->motion retrieval accuracy and the mean matched-pair distance.

    Each text i is compared against its motion i plus pool-1 distinct
    distractor motions; the query is a top-k hit when fewer than k
    distractors are strictly closer than the matched motion.
    """
    text_emb = np.asarray(text_emb, dtype=np.float64)
    motion_emb = np.asarray(motion_emb, dtype=np.float64)
    if text_emb.ndim != 2 or text_emb.shape != motion_emb.shape:
        raise ShapeError("text and motion embeddings must both be N x d", text_emb.shape, motion_emb.shape)
    count = text_emb.shape[0]
    if pool < 2:
        raise ContractError(f"retrieval pool must hold at least 2 items, got {pool}")
    if count < pool:
        raise ContractError(f"R-precision needs at least {pool} pairs, got {count}")

    rng = rng if rng is not None else make_rng(0, "r_precision")
    distances = cdist(text_emb, motion_emb)
    matched = np.diag(distances)
    ranks = np.empty(count, dtype=np.int64)
    for i in range(count):
        others = np.delete(np.arange(count), i)
        distractors = rng.choice(others, size=pool - 1, replace=False)
        ranks[i] = int(np.sum(distances[i, distractors] < matched[i]))

    return RetrievalScores(
        top1=float(np.mean(ranks < 1)),
        top2=float(np.mean(ranks < 2)),
        top3=float(np.mean(ranks < 3)),
        mm_dist=float(np.mean(matched)),
    )


def classify_by_kinetics(features: np.ndarray, reference: np.ndarray, labels: Sequence[str]) -> str:
    """Label of the nearest reference feature vector"""
    reference = np.asarray(reference, dtype=np.float64)
    if reference.ndim != 2 or reference.shape[0] != len(labels):
        raise ShapeError("reference features must be one row per label", reference.shape)
    distances = np.linalg.norm(reference - np.asarray(features, dtype=np.float64).reshape(1, -1), axis=1)
    return labels[int(np.argmin(distances))]
