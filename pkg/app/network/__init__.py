# Network package: multi-wise attention denoiser, diffusion, dual-branch control

from .base import DenoiserBranch, Linear, Module, ModuleList
from .blocks import (
    Block,
    FiLM,
    build_block,
    channel_wise_sa,
    cross_attention,
    film,
    time_wise_sa,
)
from .mwnet import MWNet, build_mwnet, mwnet_forward
from .diffusion import (
    DiffusionSchedule,
    build_schedule,
    p_sample_step,
    q_sample,
    sample,
    training_loss,
)
from .control import (
    DualBranchModel,
    SingleBranchModel,
    attach_bridges,
    clone_branch,
    dual_forward,
    inject_audio,
)
from .trainer import TrainingItem, finetune_single_branch, train_control_stage, train_main_branch

__all__ = [
    'DenoiserBranch', 'Linear', 'Module', 'ModuleList', 'Block', 'FiLM', 'build_block',
    'channel_wise_sa', 'cross_attention', 'film', 'time_wise_sa', 'MWNet', 'build_mwnet',
    'mwnet_forward', 'DiffusionSchedule', 'build_schedule', 'p_sample_step', 'q_sample',
    'sample', 'training_loss', 'DualBranchModel', 'SingleBranchModel', 'attach_bridges', 'clone_branch',
    'dual_forward', 'inject_audio', 'TrainingItem', 'finetune_single_branch',
    'train_control_stage', 'train_main_branch',
]
