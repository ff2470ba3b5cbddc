"""
Checkpoint save/load on top of the flat container.

Parameter paths are prefixed by owner so the main branch can be restored on
its own: "main.*", "control.*", "bridges.*", "audio_projector.*",
plus "normalizer.mean" / "normalizer.std".
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

import numpy as np

from ..models.experiment import ExperimentConfig
from ..motion.representation import FeatureNormalizer
from ..utils.container import CHECKPOINT_MAGIC, read_container, write_container
from ..utils.errors import DataError
from ..utils.logging import get_logger
from ..utils.rng import make_rng
from .control import DualBranchModel, SingleBranchModel
from .mwnet import MWNet, build_mwnet

logger = get_logger("training")

AnyModel = Union[MWNet, DualBranchModel, SingleBranchModel]


@dataclass
class Checkpoint:
    model: AnyModel
    normalizer: FeatureNormalizer
    config: ExperimentConfig
    stage: str
    header: Dict[str, Any]

    @property
    def main(self) -> MWNet:
        return self.model if isinstance(self.model, MWNet) else self.model.main

    def predict(self, x_t, t: int, text_ctx, audio=None):
        if isinstance(self.model, MWNet) or audio is None:
            return self.main(x_t, t, text_ctx)
        return self.model(x_t, t, text_ctx, audio)


def model_arrays(model: AnyModel) -> Dict[str, np.ndarray]:
    if isinstance(model, MWNet):
        return model.state_dict("main.")
    return model.state_dict()


def save_checkpoint(path: str, model: AnyModel, normalizer: FeatureNormalizer, config: ExperimentConfig,
                    stage: str, seed: Optional[int] = None, meta: Optional[Dict[str, Any]] = None) -> None:
    arrays = model_arrays(model)
    arrays.update(normalizer.to_arrays())
    header_meta = {"stage": stage, "config": config.to_dict()}
    header_meta.update(meta or {})
    write_container(path, CHECKPOINT_MAGIC, arrays, kind="checkpoint",
                    config_hash=config.config_hash(), seed=seed, meta=header_meta)
    logger.info(f"💾 Saved {stage} checkpoint ({len(arrays)} arrays) to {path}")


def load_checkpoint(path: str, main_only: bool = False) -> Checkpoint:
    header, arrays = read_container(path, CHECKPOINT_MAGIC)
    meta = header.get("meta", {})
    if header.get("kind") != "checkpoint" or "config" not in meta:
        raise DataError(f"{path} is not a model checkpoint")
    config = ExperimentConfig.from_dict(meta["config"])
    stage = meta.get("stage", "main")
    normalizer = FeatureNormalizer.from_arrays(arrays)

    # parameter values come from the file, so any generator works for construction
    rng = make_rng(config.seeds.model, "restore")
    main = build_mwnet(config.model, rng)
    main.load_state_dict(arrays, prefix="main.", strict=False)
    if main_only or stage == "main":
        return Checkpoint(model=main, normalizer=normalizer, config=config, stage="main", header=header)

    if stage == "control":
        model = DualBranchModel(main, config.model.audio_dim, rng)
    elif stage == "single_branch_finetune":
        model = SingleBranchModel(main, config.model.audio_dim, rng)
    else:
        raise DataError(f"Unknown checkpoint stage '{stage}'")
    state = {k: v for k, v in arrays.items() if not k.startswith("normalizer.")}
    model.load_state_dict(state)
    return Checkpoint(model=model, normalizer=normalizer, config=config, stage=stage, header=header)


def main_branch_bytes(path: str) -> bytes:
    """Concatenated main.* payloads in sorted order, for freeze-integrity comparisons"""
    _, arrays = read_container(path, CHECKPOINT_MAGIC)
    return b"".join(np.ascontiguousarray(arrays[k], dtype="<f8").tobytes()
                    for k in sorted(arrays) if k.startswith("main."))
