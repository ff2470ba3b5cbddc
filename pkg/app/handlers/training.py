import csv
import io
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..models.dataset import SyntheticDataset
from ..models.experiment import ExperimentConfig
from ..motion.representation import FeatureNormalizer
from ..network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from ..network.control import DualBranchModel, SingleBranchModel
from ..network.diffusion import DiffusionSchedule, build_schedule
from ..network.mwnet import build_mwnet
from ..network.trainer import TrainingItem, finetune_single_branch, train_control_stage, train_main_branch
from ..services.embedding import TextEmbedderFactory
from ..utils.container import atomic_write_text
from ..utils.errors import ConfigError, MotionLabError
from ..utils.logging import get_logger, log_error_with_context, log_performance
from ..utils.rng import make_rng

training_logger = get_logger('training')

# vocabulary seed shared by training, sampling and evaluation
TEXT_VOCAB_SEED = 0


@dataclass
class TrainingResult:
    stage: str
    checkpoint_path: str
    loss_path: str
    losses: List[float] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def text_context(config: ExperimentConfig, text: str) -> np.ndarray:
    embedder = TextEmbedderFactory.create_embedder(dim=config.model.context_dim, seed=TEXT_VOCAB_SEED)
    return embedder.embed_text(text).embedding


def schedule_for(config: ExperimentConfig) -> DiffusionSchedule:
    s = config.schedule
    return build_schedule(s.steps, s.beta_start, s.beta_end)


def training_items(dataset: SyntheticDataset, normalizer: FeatureNormalizer, config: ExperimentConfig,
                   with_audio: bool = False) -> List[TrainingItem]:
    contexts = {label: text_context(config, label) for label in dataset.labels}
    source = dataset.audio_items() if with_audio else dataset.items
    return [
        TrainingItem(
            features=normalizer.normalize(item.motion.features),
            context=contexts[item.text],
            audio=item.audio.features if with_audio else None,
            label=item.text,
        )
        for item in source
    ]


def write_loss_curve(path: str, losses: List[float]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "loss"])
    for step, loss in enumerate(losses, start=1):
        writer.writerow([step, repr(float(loss))])
    atomic_write_text(path, buffer.getvalue())


class TrainingHandler:
    """Text stage, control stage and the single-branch finetune baseline"""

    @log_performance('training')
    def train_main(self, config: ExperimentConfig, dataset: SyntheticDataset, out_dir: str) -> TrainingResult:
        training_logger.info(f"🚀 Main-branch training '{config.name}' on {len(dataset)} sequences")
        normalizer = FeatureNormalizer.fit([item.motion for item in dataset.items])
        items = training_items(dataset, normalizer, config)
        model = build_mwnet(config.model, make_rng(config.seeds.model, "main"))
        losses = train_main_branch(model, items, schedule_for(config), config.optim, config.optim.train_steps,
                                   make_rng(config.seeds.train, "main"))
        return self._finish(config.with_overrides(stage="main"), model, normalizer, losses, out_dir, "main")

    @log_performance('training')
    def train_control(self, config: ExperimentConfig, dataset: SyntheticDataset, main_ckpt: str,
                      out_dir: str) -> TrainingResult:
        main = self._load_main(config, main_ckpt)
        items = self._audio_items(dataset, main, config)
        model = DualBranchModel(main.main, config.model.audio_dim, make_rng(config.seeds.model, "control"))
        losses = train_control_stage(model, items, schedule_for(config), config.optim, config.optim.control_steps,
                                     make_rng(config.seeds.train, "control"))
        training_logger.info(f"📊 Bridge norm after control training: {model.bridge_norm():.6f}")
        return self._finish(config.with_overrides(stage="control"), model, main.normalizer, losses, out_dir,
                            "control")

    @log_performance('training')
    def finetune_single(self, config: ExperimentConfig, dataset: SyntheticDataset, main_ckpt: str,
                        out_dir: str) -> TrainingResult:
        main = self._load_main(config, main_ckpt)
        items = self._audio_items(dataset, main, config)
        model = SingleBranchModel(main.main, config.model.audio_dim, make_rng(config.seeds.model, "control"))
        losses = finetune_single_branch(model, items, schedule_for(config), config.optim,
                                        config.optim.control_steps, make_rng(config.seeds.train, "control"))
        return self._finish(config.with_overrides(stage="single_branch_finetune"), model, main.normalizer, losses,
                            out_dir, "single_branch_finetune")

    def _load_main(self, config: ExperimentConfig, path: str) -> Checkpoint:
        try:
            main = load_checkpoint(path, main_only=True)
        except MotionLabError as e:
            log_error_with_context(training_logger, e, {"checkpoint": path})
            raise
        if main.config.model != config.model:
            raise ConfigError(f"model section of the config differs from the one stored in {path}")
        return main

    def _audio_items(self, dataset: SyntheticDataset, main: Checkpoint, config: ExperimentConfig) -> List[TrainingItem]:
        items = training_items(dataset, main.normalizer, config, with_audio=True)
        sources = {}
        for item in dataset.audio_items():
            sources[item.audio.source] = sources.get(item.audio.source, 0) + 1
        training_logger.info(f"📊 Control-stage items: {len(items)} ({sources})")
        return items

    def _finish(self, config: ExperimentConfig, model, normalizer: FeatureNormalizer, losses: List[float],
                out_dir: str, stage: str) -> TrainingResult:
        os.makedirs(out_dir, exist_ok=True)
        ckpt_path = os.path.join(out_dir, f"{stage}.ckpt")
        loss_path = os.path.join(out_dir, f"{stage}_losses.csv")
        write_loss_curve(loss_path, losses)
        save_checkpoint(ckpt_path, model, normalizer, config, stage, seed=config.seeds.train,
                        meta={"steps": len(losses), "final_loss": losses[-1] if losses else None})
        training_logger.info(f"✅ {stage}: loss {losses[0]:.6f} -> {losses[-1]:.6f} over {len(losses)} steps"
                             if losses else f"✅ {stage}: no training steps")
        return TrainingResult(stage=stage, checkpoint_path=ckpt_path, loss_path=loss_path, losses=losses)


training_handler = TrainingHandler()
