from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config import TEXT_CONTEXT_DIM, TEXT_EMBEDDER
from ..metrics.features import MotionLike, kinetic_features
from ..models.conditions import TextCondition
from ..motion.skeleton import Skeleton
from ..utils.errors import ConfigError, ContractError, DataError
from ..utils.logging import get_logger
from ..utils.rng import make_rng
from ..utils.text import tokenize

logger = get_logger('metrics')


class TextEmbedderBase(ABC):
    """Base class for text condition encoders"""

    @abstractmethod
    def embed_text(self, text: str) -> TextCondition:
        """Tokenize and embed one text into an S x C_ctx matrix"""
        pass

    @property
    @abstractmethod
    def dimensions(self) -> int:
        """Get embedding width"""
        pass

    def embed_many(self, texts: Sequence[str]) -> List[TextCondition]:
        return [self.embed_text(text) for text in texts]

    def pooled(self, text: str) -> np.ndarray:
        """Mean token vector, for retrieval-style comparisons"""
        return self.embed_text(text).embedding.mean(axis=0)


class HashProjectionTextEmbedder(TextEmbedderBase):
    """
    Fixed random-projection vocabulary.

    Every token maps to a standard normal vector scaled by 1/sqrt(C_ctx),
    drawn from a generator keyed on (seed, token), so the table never needs
    to be stored and the same text always embeds identically. No semantic
    similarity between different tokens is implied.
    """

    def __init__(self, dim: int = TEXT_CONTEXT_DIM, seed: int = 0):
        if dim < 1:
            raise ConfigError(f"text embedding width must be positive, got {dim}")
        self._dimensions = dim
        self.seed = seed
        self._token_vector = lru_cache(maxsize=4096)(self._draw)

    def _draw(self, token: str) -> np.ndarray:
        vector = make_rng(self.seed, "token", token).standard_normal(self._dimensions) / np.sqrt(self._dimensions)
        vector.setflags(write=False)
        return vector

    def embed_text(self, text: str) -> TextCondition:
        tokens = tokenize(text)
        if not tokens:
            raise ContractError(f"text '{text[:40]}' has no tokens")
        embedding = np.stack([self._token_vector(token) for token in tokens])
        return TextCondition(text=text, tokens=tokens, embedding=embedding)

    @property
    def dimensions(self) -> int:
        return self._dimensions


class TextEmbedderFactory:
    """Factory for creating text embedders"""

    @staticmethod
    def create_embedder(kind: Optional[str] = None, dim: int = TEXT_CONTEXT_DIM, seed: int = 0) -> TextEmbedderBase:
        kind = kind or TEXT_EMBEDDER
        if kind == "hash":
            return HashProjectionTextEmbedder(dim=dim, seed=seed)
        raise ConfigError(f"Unknown text embedder: {kind}")


def embed_text(text: str, seed: int = 0, dim: int = TEXT_CONTEXT_DIM) -> TextCondition:
    if seed == text_embedder.seed and dim == text_embedder.dimensions:
        return text_embedder.embed_text(text)
    return TextEmbedderFactory.create_embedder(dim=dim, seed=seed).embed_text(text)


class MotionTextEvaluator(ABC):
    """Joint text/motion embedding space used by R-precision and MM-Dist"""

    @abstractmethod
    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        pass

    @abstractmethod
    def embed_motions(self, motions: Sequence[MotionLike]) -> np.ndarray:
        pass


class PrototypeEvaluator(MotionTextEvaluator):
    """
    Label-prototype evaluator fitted on ground truth.

    Motions embed as standardized kinetic features; a text embeds as the mean
    standardized feature of the ground-truth motions carrying that label.
    Stands in for a learned text-motion evaluator on the synthetic label set.
    """

    def __init__(self, skeleton: Optional[Skeleton] = None, upsample_fps: Optional[float] = None,
                 floor: float = 1e-6):
        self.skeleton = skeleton
        self.upsample_fps = upsample_fps
        self.floor = floor
        self.mean: Optional[np.ndarray] = None
        self.std: Optional[np.ndarray] = None
        self.prototypes: Dict[str, np.ndarray] = {}

    def _raw(self, motions: Sequence[MotionLike]) -> np.ndarray:
        return np.stack([kinetic_features(m, self.skeleton, self.upsample_fps) for m in motions])

    def fit(self, texts: Sequence[str], motions: Sequence[MotionLike]) -> 'PrototypeEvaluator':
        if len(texts) != len(motions) or not texts:
            raise ContractError("evaluator needs one text per motion and at least one pair")
        raw = self._raw(motions)
        self.mean = raw.mean(axis=0)
        self.std = np.maximum(raw.std(axis=0), self.floor)
        standardized = (raw - self.mean) / self.std
        labels = np.array(list(texts))
        self.prototypes = {label: standardized[labels == label].mean(axis=0) for label in sorted(set(texts))}
        logger.info(f"📊 Prototype evaluator fitted on {len(texts)} motions, {len(self.prototypes)} labels")
        return self

    def _require_fit(self) -> None:
        if self.mean is None:
            raise ContractError("evaluator must be fitted before use")

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        self._require_fit()
        missing = sorted(set(texts) - set(self.prototypes))
        if missing:
            raise DataError(f"evaluator has no prototype for {missing}")
        return np.stack([self.prototypes[text] for text in texts])

    def embed_motions(self, motions: Sequence[MotionLike]) -> np.ndarray:
        self._require_fit()
        return (self._raw(motions) - self.mean) / self.std


# Create singleton instance
text_embedder = TextEmbedderFactory.create_embedder()
