"""
DDPM machinery with the network predicting x_start.

Timesteps are 1-indexed: t = 1 is the last denoising step and alpha_bar(0)
is taken to be 1, so the posterior at t = 1 collapses onto x_start.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from tqdm import tqdm

from ..config import BETA_END, BETA_START, DIFFUSION_STEPS, FEATURE_DIM
from ..numerics import Tensor, mse_loss, no_grad
from ..utils.errors import ConfigError, ContractError, ShapeError
from ..utils.logging import get_logger

logger = get_logger("sampling")

# (x_t, t, context) -> x_start prediction
Denoiser = Callable[[Tensor, int, np.ndarray], Tensor]


@dataclass(frozen=True)
class DiffusionSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def steps(self) -> int:
        return self.betas.shape[0]

    def check_t(self, t: int) -> int:
        if not 1 <= int(t) <= self.steps:
            raise ContractError(f"timestep {t} outside [1, {self.steps}]")
        return int(t)

    def beta(self, t: int) -> float:
        return float(self.betas[self.check_t(t) - 1])

    def alpha(self, t: int) -> float:
        return float(self.alphas[self.check_t(t) - 1])

    def alpha_bar(self, t: int) -> float:
        if t == 0:
            return 1.0
        return float(self.alpha_bars[self.check_t(t) - 1])

    def posterior(self, t: int):
        """(coef_x_start, coef_x_t, variance) of q(x_{t-1} | x_t, x_start)"""
        t = self.check_t(t)
        beta, alpha = self.beta(t), self.alpha(t)
        bar_t, bar_prev = self.alpha_bar(t), self.alpha_bar(t - 1)
        coef_start = np.sqrt(bar_prev) * beta / (1.0 - bar_t)
        coef_t = np.sqrt(alpha) * (1.0 - bar_prev) / (1.0 - bar_t)
        variance = (1.0 - bar_prev) / (1.0 - bar_t) * beta
        return coef_start, coef_t, variance


def build_schedule(steps: int = DIFFUSION_STEPS, beta_start: float = BETA_START,
                   beta_end: float = BETA_END) -> DiffusionSchedule:
    """Linear beta from beta_start (t = 1) to beta_end (t = steps)"""
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if not 0.0 < beta_start < beta_end < 1.0:
        raise ConfigError(f"need 0 < beta_start < beta_end < 1, got {beta_start}, {beta_end}")
    betas = np.linspace(beta_start, beta_end, steps, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    for array in (betas, alphas, alpha_bars):
        array.setflags(write=False)
    return DiffusionSchedule(betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def q_sample(x0: np.ndarray, t: int, noise: np.ndarray, sched: DiffusionSchedule) -> np.ndarray:
    """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise"""
    x0, noise = np.asarray(x0, dtype=np.float64), np.asarray(noise, dtype=np.float64)
    if x0.shape != noise.shape:
        raise ShapeError("noise must match x0", x0.shape, noise.shape)
    bar = sched.alpha_bar(sched.check_t(t))
    return np.sqrt(bar) * x0 + np.sqrt(1.0 - bar) * noise


def p_sample_step(x_t: np.ndarray, t: int, x_start_pred: np.ndarray, sched: DiffusionSchedule,
                  noise: Optional[np.ndarray] = None, clamp_x_start: Optional[float] = None) -> np.ndarray:
    """One ancestral step x_t -> x_{t-1}; noise is ignored at t = 1"""
    t = sched.check_t(t)
    x_t = np.asarray(x_t, dtype=np.float64)
    x_start_pred = np.asarray(x_start_pred, dtype=np.float64)
    if x_t.shape != x_start_pred.shape:
        raise ShapeError("x_start prediction must match x_t", x_t.shape, x_start_pred.shape)
    if clamp_x_start is not None:
        x_start_pred = np.clip(x_start_pred, -clamp_x_start, clamp_x_start)
    if t == 1:
        return x_start_pred.copy()
    coef_start, coef_t, variance = sched.posterior(t)
    mean = coef_start * x_start_pred + coef_t * x_t
    if noise is None:
        return mean
    return mean + np.sqrt(variance) * np.asarray(noise, dtype=np.float64)


def training_loss(model: Denoiser, x0: np.ndarray, text_ctx: np.ndarray, rng: np.random.Generator,
                  sched: DiffusionSchedule, t: Optional[int] = None) -> Tensor:
    """MSE between the model's x_start prediction at q_sample(x0, t, noise) and x0"""
    x0 = np.asarray(x0, dtype=np.float64)
    if t is None:
        t = int(rng.integers(1, sched.steps + 1))
    noise = rng.standard_normal(x0.shape)
    x_t = q_sample(x0, t, noise, sched)
    prediction = model(Tensor(x_t), t, text_ctx)
    return mse_loss(prediction, x0)


def guided_prediction(model: Denoiser, x_t: np.ndarray, t: int, text_ctx: np.ndarray,
                      null_ctx: Optional[np.ndarray], guidance_scale: float) -> np.ndarray:
    conditional = model(Tensor(x_t), t, text_ctx).numpy()
    if guidance_scale == 1.0 or null_ctx is None:
        return conditional
    unconditional = model(Tensor(x_t), t, null_ctx).numpy()
    return unconditional + guidance_scale * (conditional - unconditional)


def sample(model: Denoiser, frames: int, text_ctx: np.ndarray, sched: DiffusionSchedule,
           rng: np.random.Generator, feature_dim: int = FEATURE_DIM, clamp_x_start: Optional[float] = None,
           guidance_scale: float = 1.0, null_ctx: Optional[np.ndarray] = None,
           progress: bool = False) -> np.ndarray:
    """Ancestral sampling from standard normal noise, t = steps down to 1"""
    if frames < 1:
        raise ContractError(f"frames must be >= 1, got {frames}")
    x = rng.standard_normal((frames, feature_dim))
    steps = range(sched.steps, 0, -1)
    if progress:
        steps = tqdm(steps, desc="sampling", leave=False)
    with no_grad():
        for t in steps:
            x_start = guided_prediction(model, x, t, text_ctx, null_ctx, guidance_scale)
            noise = rng.standard_normal(x.shape) if t > 1 else None
            x = p_sample_step(x, t, x_start, sched, noise, clamp_x_start)
    logger.debug(f"🎲 Sampled {frames} frames over {sched.steps} steps")
    return x
