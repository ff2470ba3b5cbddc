from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from ..models.experiment import OptimConfig
from ..numerics import Adam, Tensor, backward
from ..utils.errors import ContractError, NumericError
from ..utils.logging import get_logger
from .control import DualBranchModel, SingleBranchModel, require_audio_items
from .diffusion import DiffusionSchedule, training_loss
from .mwnet import MWNet

logger = get_logger("training")

# (x_t, t, context, audio) -> x_start prediction
Predictor = Callable[[Tensor, int, np.ndarray, Optional[np.ndarray]], Tensor]


@dataclass
class TrainingItem:
    """Normalized T x 263 target, S x C_ctx text context and optional T x C_a audio"""
    features: np.ndarray
    context: np.ndarray
    audio: Optional[np.ndarray] = None
    label: str = ""


def fit(
    predict: Predictor,
    items: Sequence[TrainingItem],
    params: Dict[str, Tensor],
    sched: DiffusionSchedule,
    optim: OptimConfig,
    steps: int,
    rng: np.random.Generator,
    desc: str = "train",
    fixed_t: Optional[int] = None,
) -> List[float]:
    """Adam on the x_start objective; returns the per-step batch loss"""
    if not items:
        raise ContractError("cannot train on an empty dataset")
    if not params:
        raise ContractError("no trainable parameters")
    optimizer = Adam(params, lr=optim.lr, beta1=optim.beta1, beta2=optim.beta2, eps=optim.eps)
    batch = min(optim.batch_size, len(items))
    losses: List[float] = []

    logger.info(f"🚀 {desc}: {steps} steps, batch {batch}, {sum(p.size for p in params.values())} trainable values")
    progress = tqdm(range(steps), desc=desc, leave=False, disable=steps < 50)
    for step in progress:
        picks = rng.choice(len(items), size=batch, replace=False)
        total = None
        for index in picks:
            item = items[index]

            def model(x_t, t, ctx, _audio=item.audio):
                return predict(x_t, t, ctx, _audio)

            loss = training_loss(model, item.features, item.context, rng, sched, t=fixed_t)
            total = loss if total is None else total + loss
        total = total * (1.0 / batch)
        optimizer.zero_grad()
        backward(total)
        optimizer.step()

        value = total.item()
        if not np.isfinite(value):
            raise NumericError(f"{desc}: loss became non-finite at step {step + 1}")
        losses.append(value)
        if (step + 1) % optim.log_every == 0 or step == 0:
            logger.info(f"📊 {desc} step {step + 1}/{steps} loss={value:.6f}")
            progress.set_postfix(loss=f"{value:.4f}")
    optimizer.zero_grad()
    return losses


def train_main_branch(model: MWNet, items: Sequence[TrainingItem], sched: DiffusionSchedule,
                      optim: OptimConfig, steps: int, rng: np.random.Generator) -> List[float]:
    """Text-stage training of a single denoiser, every parameter trainable"""
    model.requires_grad_(True)
    return fit(lambda x, t, c, a: model(x, t, c), items, model.trainable_parameters(), sched, optim,
               steps, rng, desc="train-main")


def train_control_stage(model: DualBranchModel, items: Sequence[TrainingItem], sched: DiffusionSchedule,
                        optim: OptimConfig, steps: int, rng: np.random.Generator) -> List[float]:
    """Update only the control branch, bridges and audio projector; the main branch stays frozen"""
    require_audio_items(items)
    model.main.requires_grad_(False)
    frozen = model.main.checksum()
    losses = fit(model, items, model.control_parameters(), sched, optim, steps, rng, desc="train-control")
    if model.main.checksum() != frozen:
        raise ContractError("the frozen main branch changed during control training")
    return losses


def finetune_single_branch(model: SingleBranchModel, items: Sequence[TrainingItem], sched: DiffusionSchedule,
                           optim: OptimConfig, steps: int, rng: np.random.Generator) -> List[float]:
    """Baseline: optimize the main branch itself with audio added to its input latent"""
    require_audio_items(items)
    model.requires_grad_(True)
    return fit(model, items, model.control_parameters(), sched, optim, steps, rng, desc="finetune-single")
