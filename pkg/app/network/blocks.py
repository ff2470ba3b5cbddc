"""
Multi-wise attention building blocks.

Tokens of a block order string:
    T   time-wise self-attention (attention over frames, per head)
    CS  channel-wise self-attention (attention over channels, per group)
    CA  cross-attention from frames to the text context
    F   feed-forward network

Every module sits in a residual branch and is followed by a FiLM that
injects the timestep embedding:

    FiLM(x, e) = x + LN(x * (e W1 + e)) + e W2

with e a 1 x C row and W1, W2 both C x C (the identity term of (W1 + I) is
the "+ e"). A zero embedding gives FiLM(x, 0) = x exactly.
"""

from typing import List, Optional, Tuple, Union

import numpy as np

from ..models.experiment import BlockSpec
from ..numerics import Tensor, as_tensor, concat, gelu, layer_norm, matmul, softmax, transpose
from ..utils.errors import ConfigError, ShapeError
from .base import Linear, Module, xavier_uniform

AttentionResult = Union[Tensor, Tuple[Tensor, List[Tensor]]]


# =====================================================================
# Embeddings
# =====================================================================

def sinusoidal_embedding(positions: Union[int, np.ndarray], dim: int, max_period: float = 10000.0) -> np.ndarray:
    """N x dim table of [cos | sin] features; a scalar position gives 1 x dim"""
    positions = np.atleast_1d(np.asarray(positions, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / max(half, 1))
    args = positions[:, None] * freqs[None, :]
    table = np.concatenate([np.cos(args), np.sin(args)], axis=1)
    if dim % 2:
        table = np.concatenate([table, np.zeros((positions.shape[0], 1))], axis=1)
    return table


def positional_encoding(frames: int, dim: int) -> np.ndarray:
    return sinusoidal_embedding(np.arange(frames), dim)


class TimestepEmbedder(Module):
    """t -> Linear(GELU(Linear(sinusoid(t)))), one 1 x C row"""

    def __init__(self, width: int, rng: np.random.Generator):
        super().__init__()
        self.width = width
        self.fc1 = self.add_module("fc1", Linear(width, width, rng))
        self.fc2 = self.add_module("fc2", Linear(width, width, rng))

    def __call__(self, t: int) -> Tensor:
        return self.fc2(gelu(self.fc1(Tensor(sinusoidal_embedding(t, self.width)))))


# =====================================================================
# Functional forms
# =====================================================================

def film(x, eps_t, w1, w2, ln_eps: float = 1e-5) -> Tensor:
    x, eps_t = as_tensor(x), as_tensor(eps_t)
    if eps_t.ndim == 1:
        eps_t = eps_t.reshape(1, -1)
    if x.ndim != 2 or eps_t.shape != (1, x.shape[1]):
        raise ShapeError("FiLM needs a T x C input and a C-wide embedding", x.shape, eps_t.shape)
    scale = matmul(eps_t, w1) + eps_t
    return x + layer_norm(x * scale, axis=-1, eps=ln_eps) + matmul(eps_t, w2)


def _attend(q: Tensor, k: Tensor, v: Tensor, scale: float) -> Tuple[Tensor, Tensor]:
    weights = softmax(matmul(q, transpose(k)) * (1.0 / scale), axis=-1)
    return matmul(weights, v), weights


def _split(width: int, parts: int, label: str) -> int:
    if parts < 1 or width % parts:
        raise ShapeError(f"width is not divisible by the number of {label}", (width,), (parts,))
    return width // parts


def _multi_head(x, source, wq, wk, wv, heads: int, scale: Optional[float], return_weights: bool) -> AttentionResult:
    x, source = as_tensor(x), as_tensor(source)
    q, k, v = matmul(x, wq), matmul(source, wk), matmul(source, wv)
    head_width = _split(q.shape[1], heads, "heads")
    scale = np.sqrt(head_width) if scale is None else scale
    outputs, weights = [], []
    for i in range(heads):
        cols = (slice(None), slice(i * head_width, (i + 1) * head_width))
        out, w = _attend(q[cols], k[cols], v[cols], scale)
        outputs.append(out)
        weights.append(w)
    result = concat(outputs, axis=-1) if heads > 1 else outputs[0]
    return (result, weights) if return_weights else result


def time_wise_sa(x, wq, wk, wv, heads: int, scale: Optional[float] = None,
                 return_weights: bool = False) -> AttentionResult:
    """Per head: Softmax(Q_i K_i^T / sqrt(C_h)) V_i over the frame axis, heads concatenated"""
    return _multi_head(x, x, wq, wk, wv, heads, scale, return_weights)


def cross_attention(x, context, wq, wk, wv, heads: int, scale: Optional[float] = None,
                    return_weights: bool = False) -> AttentionResult:
    """Queries from the motion frames, keys and values from the S x C_ctx context"""
    context = as_tensor(context)
    if context.ndim != 2 or context.shape[1] != as_tensor(wk).shape[0]:
        raise ShapeError("context width does not match the key projection", context.shape, as_tensor(wk).shape)
    return _multi_head(x, context, wq, wk, wv, heads, scale, return_weights)


def channel_wise_sa(x, wq, wk, wv, groups: int, scale: Optional[float] = None,
                    return_weights: bool = False) -> AttentionResult:
    """Per group: (Softmax(Q_i^T K_i / sqrt(C_g)) V_i^T)^T, a C_g x C_g map over channels"""
    x = as_tensor(x)
    q, k, v = matmul(x, wq), matmul(x, wk), matmul(x, wv)
    group_width = _split(q.shape[1], groups, "groups")
    scale = np.sqrt(group_width) if scale is None else scale
    outputs, weights = [], []
    for i in range(groups):
        cols = (slice(None), slice(i * group_width, (i + 1) * group_width))
        out, w = _attend(transpose(q[cols]), transpose(k[cols]), transpose(v[cols]), scale)
        outputs.append(transpose(out))
        weights.append(w)
    result = concat(outputs, axis=-1) if groups > 1 else outputs[0]
    return (result, weights) if return_weights else result


def feed_forward(x, w1, b1, w2, b2) -> Tensor:
    return matmul(gelu(matmul(as_tensor(x), w1) + b1), w2) + b2


# =====================================================================
# Parameterized modules
# =====================================================================

class FiLM(Module):
    def __init__(self, width: int, rng: np.random.Generator, ln_eps: float = 1e-5):
        super().__init__()
        self.ln_eps = ln_eps
        self.w1 = self.add_parameter("w1", xavier_uniform(rng, width, width))
        self.w2 = self.add_parameter("w2", xavier_uniform(rng, width, width))

    def __call__(self, x, eps_t) -> Tensor:
        return film(x, eps_t, self.w1, self.w2, self.ln_eps)


class TimeWiseSelfAttention(Module):
    def __init__(self, width: int, heads: int, rng: np.random.Generator):
        super().__init__()
        _split(width, heads, "heads")
        self.heads = heads
        self.wq = self.add_parameter("wq", xavier_uniform(rng, width, width))
        self.wk = self.add_parameter("wk", xavier_uniform(rng, width, width))
        self.wv = self.add_parameter("wv", xavier_uniform(rng, width, width))

    def __call__(self, x, context=None) -> Tensor:
        return time_wise_sa(x, self.wq, self.wk, self.wv, self.heads)


class ChannelWiseSelfAttention(Module):
    def __init__(self, width: int, groups: int, rng: np.random.Generator):
        super().__init__()
        _split(width, groups, "groups")
        self.groups = groups
        self.wq = self.add_parameter("wq", xavier_uniform(rng, width, width))
        self.wk = self.add_parameter("wk", xavier_uniform(rng, width, width))
        self.wv = self.add_parameter("wv", xavier_uniform(rng, width, width))

    def __call__(self, x, context=None) -> Tensor:
        return channel_wise_sa(x, self.wq, self.wk, self.wv, self.groups)


class CrossAttention(Module):
    def __init__(self, width: int, context_dim: int, heads: int, rng: np.random.Generator):
        super().__init__()
        _split(width, heads, "heads")
        self.heads = heads
        self.wq = self.add_parameter("wq", xavier_uniform(rng, width, width))
        self.wk = self.add_parameter("wk", xavier_uniform(rng, context_dim, width))
        self.wv = self.add_parameter("wv", xavier_uniform(rng, context_dim, width))

    def __call__(self, x, context=None) -> Tensor:
        if context is None:
            raise ShapeError("cross-attention needs a context", as_tensor(x).shape)
        return cross_attention(x, context, self.wq, self.wk, self.wv, self.heads)


class FeedForward(Module):
    def __init__(self, width: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.fc1 = self.add_module("fc1", Linear(width, hidden, rng))
        self.fc2 = self.add_module("fc2", Linear(hidden, width, rng))

    def __call__(self, x, context=None) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


def _make_module(token: str, spec: BlockSpec, rng: np.random.Generator) -> Module:
    if token == "T":
        return TimeWiseSelfAttention(spec.width, spec.heads, rng)
    if token == "CS":
        return ChannelWiseSelfAttention(spec.width, spec.groups, rng)
    if token == "CA":
        return CrossAttention(spec.width, spec.context_dim, spec.heads, rng)
    if token == "F":
        return FeedForward(spec.width, spec.ffn_width, rng)
    raise ConfigError(f"Unknown block token '{token}'")


class Block(Module):
    """One multi-wise block: [norm -> module -> residual -> FiLM] per token of the order"""

    def __init__(self, spec: BlockSpec, rng: np.random.Generator):
        super().__init__()
        self.spec = spec
        self.tokens: List[str] = list(spec.order)
        self.layers: List[Module] = []
        self.films: List[FiLM] = []
        for index, token in enumerate(self.tokens):
            self.layers.append(self.add_module(f"m{index}_{token.lower()}", _make_module(token, spec, rng)))
            self.films.append(self.add_module(f"film{index}", FiLM(spec.width, rng, spec.ln_eps)))

    def __call__(self, x, eps_t, context=None) -> Tensor:
        x = as_tensor(x)
        pre_norm = self.spec.norm_position == "pre"
        for layer, film_layer in zip(self.layers, self.films):
            h = layer_norm(x, eps=self.spec.ln_eps) if pre_norm else x
            x = x + layer(h, context)
            if not pre_norm:
                x = layer_norm(x, eps=self.spec.ln_eps)
            x = film_layer(x, eps_t)
        return x


def build_block(spec: Union[BlockSpec, str], rng: np.random.Generator) -> Block:
    """Instantiate the modules of a block in order, each followed by a FiLM"""
    if isinstance(spec, str):
        spec = BlockSpec.parse(spec)
    return Block(spec, rng)
