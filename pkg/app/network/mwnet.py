from typing import Optional, Union

import numpy as np

from ..config import FEATURE_DIM
from ..models.experiment import BlockSpec, ModelConfig
from ..numerics import Tensor, as_tensor
from ..utils.errors import ShapeError
from ..utils.logging import get_logger
from .base import DenoiserBranch, Linear, ModuleList
from .blocks import TimestepEmbedder, build_block, positional_encoding

logger = get_logger("numerics")


class MWNet(DenoiserBranch):
    """
    Multi-wise attention denoiser predicting x_start.

    263 -> C input projection plus sinusoidal frame positions, layer_count
    multi-wise blocks sharing one timestep embedding, C -> 263 output projection.
    """

    def __init__(self, spec: BlockSpec, rng: np.random.Generator, feature_dim: int = FEATURE_DIM):
        super().__init__()
        self.spec = spec
        self.feature_dim = feature_dim
        self.input_proj = self.add_module("input_proj", Linear(feature_dim, spec.width, rng))
        self.time_embed = self.add_module("time_embed", TimestepEmbedder(spec.width, rng))
        self._blocks = self.add_module(
            "blocks", ModuleList([build_block(spec, rng) for _ in range(spec.layer_count)])
        )
        self.output_proj = self.add_module("output_proj", Linear(spec.width, feature_dim, rng))
        logger.debug(f"🧱 MWNet {spec.order_string} x{spec.layer_count}, {self.parameter_count()} parameters")

    @classmethod
    def from_config(cls, config: ModelConfig, rng: np.random.Generator) -> 'MWNet':
        return cls(config.to_block_spec(), rng)

    @property
    def blocks(self) -> ModuleList:
        return self._blocks

    @property
    def width(self) -> int:
        return self.spec.width

    def embed(self, x_t) -> Tensor:
        x_t = as_tensor(x_t)
        if x_t.ndim != 2 or x_t.shape[1] != self.feature_dim:
            raise ShapeError(f"MWNet expects T x {self.feature_dim} input", x_t.shape)
        return self.input_proj(x_t) + positional_encoding(x_t.shape[0], self.spec.width)

    def timestep_embedding(self, t: int) -> Tensor:
        return self.time_embed(t)

    def head(self, h: Tensor) -> Tensor:
        return self.output_proj(h)

    def null_context(self) -> np.ndarray:
        """Single all-zero context row, the unconditional input for guidance"""
        return np.zeros((1, self.spec.context_dim))


def mwnet_forward(x_t, t: int, text_ctx, model: MWNet) -> Tensor:
    """x_start prediction of a single MWNet for a T x 263 noisy input"""
    return model(x_t, t, text_ctx)


def build_mwnet(config: Union[ModelConfig, BlockSpec], rng: np.random.Generator,
                feature_dim: Optional[int] = None) -> MWNet:
    spec = config.to_block_spec() if isinstance(config, ModelConfig) else config
    return MWNet(spec, rng, feature_dim or FEATURE_DIM)
