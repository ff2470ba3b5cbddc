import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..models.dataset import SyntheticDataset
from ..models.experiment import ABLATION_ORDERS, ExperimentConfig
from ..network.checkpoint import load_checkpoint, main_branch_bytes
from ..numerics import Tensor, no_grad
from ..utils.container import atomic_write_text
from ..utils.errors import ConfigError
from ..utils.logging import get_logger, log_performance
from ..utils.rng import make_rng
from .evaluation import evaluation_handler
from .training import TrainingResult, text_context, training_handler

pipeline_logger = get_logger('pipeline')

MODES = ("dual", "single")
_TABLE_COLUMNS = ("name", "mode", "parameters", "initial_loss", "final_loss", "trainable", "freeze_intact",
                  "text_drift")


@dataclass
class AblationGrid:
    base: ExperimentConfig
    orders: List[str] = field(default_factory=list)
    modes: List[str] = field(default_factory=list)
    evaluate: bool = True

    def __post_init__(self):
        unknown = sorted(set(self.modes) - set(MODES))
        if unknown:
            raise ConfigError(f"Unknown ablation mode(s) {unknown}, expected {MODES}")
        if not self.orders and not self.modes:
            raise ConfigError("the ablation grid is empty")

    def config_for(self, order: str) -> ExperimentConfig:
        return self.base.with_overrides(model={"block_spec": order})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AblationGrid':
        data = dict(data or {})
        unknown = sorted(set(data) - {"base", "orders", "modes", "evaluate"})
        if unknown:
            raise ConfigError(f"Unknown ablation key(s) {unknown}")
        orders = data.get("orders", [])
        if orders == "all":
            orders = list(ABLATION_ORDERS)
        return cls(
            base=ExperimentConfig.from_dict(data.get("base", {})),
            orders=list(orders),
            modes=list(data.get("modes", [])),
            evaluate=bool(data.get("evaluate", True)),
        )

    @classmethod
    def from_yaml(cls, path: str) -> 'AblationGrid':
        if not os.path.exists(path):
            raise ConfigError(f"Ablation grid not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                return cls.from_dict(yaml.safe_load(f))
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {path}: {e}") from e


@dataclass
class AblationRow:
    name: str
    mode: str
    block_spec: str
    parameters: int
    initial_loss: float
    final_loss: float
    trainable: bool
    freeze_intact: Optional[bool] = None
    text_drift: Optional[float] = None
    metrics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def format_table(rows: List[AblationRow]) -> str:
    """Whitespace-aligned table, one line per row in run order"""
    metric_keys = sorted({key for row in rows for key in row.metrics})
    header = list(_TABLE_COLUMNS) + metric_keys

    def cell(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    body = []
    for row in rows:
        values = row.to_dict()
        body.append([cell(values[c]) for c in _TABLE_COLUMNS] + [cell(row.metrics.get(k)) for k in metric_keys])
    widths = [max([len(h)] + [len(line[i]) for line in body]) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(line, widths)) for line in body]
    return "\n".join(line.rstrip() for line in lines) + "\n"


class AblationHandler:
    def _row(self, name: str, mode: str, config: ExperimentConfig, result: TrainingResult,
             **extra) -> AblationRow:
        ckpt = load_checkpoint(result.checkpoint_path)
        losses = np.asarray(result.losses, dtype=np.float64)
        return AblationRow(
            name=name,
            mode=mode,
            block_spec=config.model.block_spec,
            parameters=ckpt.model.parameter_count(),
            initial_loss=float(losses[0]) if losses.size else float("nan"),
            final_loss=float(losses[-1]) if losses.size else float("nan"),
            trainable=bool(losses.size and np.all(np.isfinite(losses))),
            **extra,
        )

    def text_drift(self, config: ExperimentConfig, before_path: str, after_path: str) -> float:
        """Largest change of the main branch's text-only prediction on a fixed reference input"""
        before = load_checkpoint(before_path, main_only=True).main
        after = load_checkpoint(after_path, main_only=True).main
        rng = make_rng(config.seeds.sample, "drift_input")
        x_t = rng.standard_normal((config.data.frames, before.feature_dim))
        t = max(1, config.schedule.steps // 2)
        context = text_context(config, config.data.labels[0])
        with no_grad():
            a = before(Tensor(x_t), t, context).numpy()
            b = after(Tensor(x_t), t, context).numpy()
        return float(np.max(np.abs(a - b)))

    def _metrics(self, grid: AblationGrid, config: ExperimentConfig, dataset: SyntheticDataset, ckpt_path: str,
                 protocol: str) -> Dict[str, float]:
        if not grid.evaluate:
            return {}
        return evaluation_handler.evaluate(config, dataset, load_checkpoint(ckpt_path), protocol).metrics

    @log_performance('pipeline')
    def run(self, grid: AblationGrid, dataset: SyntheticDataset, out_dir: str) -> List[AblationRow]:
        configs = [(order, grid.config_for(order)) for order in grid.orders]
        pipeline_logger.info(f"🚀 Ablation: {len(configs)} block orders, modes {grid.modes}")
        rows: List[AblationRow] = []

        for index, (order, config) in enumerate(configs):
            result = training_handler.train_main(config, dataset, os.path.join(out_dir, f"order_{index:02d}"))
            metrics = self._metrics(grid, config, dataset, result.checkpoint_path, "text")
            row = self._row(order, "main", config, result, metrics=metrics)
            rows.append(row)
            pipeline_logger.info(f"📊 {order}: final loss {row.final_loss:.6f}")

        if grid.modes:
            config = grid.base
            main = training_handler.train_main(config, dataset, os.path.join(out_dir, "modes"))
            for mode in grid.modes:
                mode_dir = os.path.join(out_dir, mode)
                if mode == "dual":
                    result = training_handler.train_control(config, dataset, main.checkpoint_path, mode_dir)
                else:
                    result = training_handler.finetune_single(config, dataset, main.checkpoint_path, mode_dir)
                rows.append(self._row(
                    "MCM" if mode == "dual" else "finetune",
                    mode,
                    config,
                    result,
                    freeze_intact=main_branch_bytes(main.checkpoint_path) == main_branch_bytes(result.checkpoint_path),
                    text_drift=self.text_drift(config, main.checkpoint_path, result.checkpoint_path),
                    metrics=self._metrics(grid, config, dataset, result.checkpoint_path, "multi"),
                ))
        return rows

    def ablation_cmd(self, grid: AblationGrid, dataset: SyntheticDataset, out_dir: str) -> List[AblationRow]:
        rows = self.run(grid, dataset, out_dir)
        table = format_table(rows)
        atomic_write_text(os.path.join(out_dir, "ablation.txt"), table)
        atomic_write_text(os.path.join(out_dir, "ablation.json"), json.dumps(
            {"config_hash": grid.base.config_hash(), "rows": [row.to_dict() for row in rows]}, indent=2,
            sort_keys=True))
        pipeline_logger.info(f"✅ Ablation table:\n{table}")
        return rows


ablation_handler = AblationHandler()
