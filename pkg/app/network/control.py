"""
Dual-branch multi-condition control.

The pre-trained main branch is frozen. A structurally identical control
branch is cloned from it and receives the motion latent plus projected
audio features. After every control block, a zero-initialized bridge maps
the control activation onto an additive offset of the matching main-block
input, so at initialization the composite output equals the main branch's.
"""

import copy
from typing import Dict, Optional, Union

import numpy as np

from ..models.conditions import AudioCondition
from ..numerics import Tensor, as_tensor
from ..utils.errors import ContractError, ShapeError
from ..utils.logging import get_logger
from .base import DenoiserBranch, Linear, Module, ModuleList

logger = get_logger("training")

AudioInput = Union[AudioCondition, np.ndarray]


def clone_branch(main: DenoiserBranch) -> DenoiserBranch:
    """Deep copy with fresh, trainable parameter buffers that never alias the source"""
    control = copy.deepcopy(main)
    for param in control.parameters():
        param.assign(np.array(param.data))
        param.grad = None
        param.requires_grad = True
    return control


def _check_mirror(main: DenoiserBranch, control: DenoiserBranch) -> None:
    main_shapes = [(n, p.shape) for n, p in main.named_parameters()]
    control_shapes = [(n, p.shape) for n, p in control.named_parameters()]
    if main_shapes != control_shapes or len(main.blocks) != len(control.blocks):
        raise ShapeError("control branch does not mirror the main branch")


def match_audio_length(features: np.ndarray, frames: int) -> np.ndarray:
    """Truncate, or pad by repeating the last frame, to exactly `frames` rows"""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ShapeError("audio features must be a non-empty T_a x C_a matrix", features.shape)
    if features.shape[0] >= frames:
        return features[:frames]
    return np.pad(features, ((0, frames - features.shape[0]), (0, 0)), mode="edge")


def inject_audio(audio: AudioInput, motion_latent, projector: Linear) -> Tensor:
    """motion_latent + projector(audio), audio first matched to the latent's frame count"""
    motion_latent = as_tensor(motion_latent)
    features = audio.features if isinstance(audio, AudioCondition) else audio
    matched = match_audio_length(features, motion_latent.shape[0])
    if matched.shape[1] != projector.in_dim:
        raise ShapeError("audio width does not match the projector", matched.shape, projector.weight.shape)
    return motion_latent + projector(Tensor(matched))


class DualBranchModel(Module):
    """Frozen main branch, trainable control clone, zero bridges, audio projector"""

    def __init__(self, main: DenoiserBranch, audio_dim: int, rng: np.random.Generator):
        super().__init__()
        self.main = self.add_module("main", main)
        self.main.requires_grad_(False)
        self.control = self.add_module("control", clone_branch(main))
        self.audio_projector = self.add_module("audio_projector", Linear(audio_dim, main.blocks[0].spec.width, rng))
        self.bridges = self.add_module("bridges", ModuleList())
        self.attach_bridges()

    def attach_bridges(self) -> "DualBranchModel":
        """One zero-initialized C -> C affine map per block"""
        _check_mirror(self.main, self.control)
        width = self.main.blocks[0].spec.width
        for _ in range(len(self.bridges), len(self.main.blocks)):
            self.bridges.append(Linear(width, width, init="zeros"))
        return self

    def forward_main(self, x_t, t: int, text_ctx) -> Tensor:
        return self.main(x_t, t, text_ctx)

    def __call__(self, x_t, t: int, text_ctx, audio: Optional[AudioInput] = None) -> Tensor:
        if audio is None:
            return self.forward_main(x_t, t, text_ctx)
        return dual_forward(x_t, t, text_ctx, audio, self)

    def control_parameters(self) -> Dict[str, Tensor]:
        """Everything the control stage updates: control branch, bridges, audio projector"""
        params = {}
        for prefix in ("control", "bridges", "audio_projector"):
            params.update(self._modules[prefix].parameter_dict(prefix + "."))
        return params

    def bridge_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(p.data ** 2) for p in self.bridges.parameters())))


def dual_forward(x_t, t: int, text_ctx, audio: AudioInput, model: DualBranchModel) -> Tensor:
    main, control = model.main, model.control
    main_eps = main.timestep_embedding(t)
    control_eps = control.timestep_embedding(t)
    h = main.embed(x_t)
    c = inject_audio(audio, control.embed(x_t), model.audio_projector)
    for main_block, control_block, bridge in zip(main.blocks, control.blocks, model.bridges):
        c = control_block(c, control_eps, text_ctx)
        h = main_block(h + bridge(c), main_eps, text_ctx)
    return main.head(h)


class SingleBranchModel(Module):
    """Finetune baseline: audio added straight to the main latent, every parameter trainable"""

    def __init__(self, main: DenoiserBranch, audio_dim: int, rng: np.random.Generator):
        super().__init__()
        self.main = self.add_module("main", main)
        self.main.requires_grad_(True)
        self.audio_projector = self.add_module("audio_projector", Linear(audio_dim, main.blocks[0].spec.width, rng))

    def forward_main(self, x_t, t: int, text_ctx) -> Tensor:
        return self.main(x_t, t, text_ctx)

    def __call__(self, x_t, t: int, text_ctx, audio: Optional[AudioInput] = None) -> Tensor:
        if audio is None:
            return self.forward_main(x_t, t, text_ctx)
        main = self.main
        eps_t = main.timestep_embedding(t)
        h = inject_audio(audio, main.embed(x_t), self.audio_projector)
        for block in main.blocks:
            h = block(h, eps_t, text_ctx)
        return main.head(h)

    def control_parameters(self) -> Dict[str, Tensor]:
        return self.trainable_parameters()


def require_audio_items(items) -> None:
    if not items:
        raise ContractError("the control-stage dataset is empty")
    if any(item.audio is None for item in items):
        raise ContractError("every control-stage item needs audio features")


def attach_bridges(model: DualBranchModel) -> DualBranchModel:
    return model.attach_bridges()
