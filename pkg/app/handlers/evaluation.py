import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..models.conditions import AudioCondition
from ..models.dataset import DatasetItem, SyntheticDataset
from ..models.experiment import PROTOCOLS, ExperimentConfig
from ..models.metrics import BeatSequence, FeatureStats
from ..models.motion import MotionSeq
from ..metrics.beats import beat_align_score, kinematic_beats
from ..metrics.diversity import diversity, multimodality
from ..metrics.features import feature_matrix
from ..metrics.frechet import frechet_distance
from ..metrics.retrieval import classify_by_kinetics, r_precision_mm_dist
from ..network.checkpoint import Checkpoint
from ..services.embedding import PrototypeEvaluator
from ..utils.container import atomic_write_text
from ..utils.errors import ConfigError, ContractError, DataError
from ..utils.logging import get_logger, log_performance
from ..utils.rng import make_rng
from .sampling import sampling_handler

metrics_logger = get_logger('metrics')

REPORT_KEYS = (
    "fid_k", "fid_g", "diversity_k", "diversity_g", "gt_diversity_k", "gt_diversity_g",
    "multimodality", "bas", "r_precision_top1", "r_precision_top2", "r_precision_top3",
    "mm_dist", "label_accuracy",
)

# multimodality draws use seeds offset past the per-item ones
_MM_SEED_OFFSET = 100_000


@dataclass
class SampleJob:
    label: str
    text: Optional[str]
    frames: int
    seed: int
    audio: Optional[AudioCondition] = None


@dataclass
class MetricsReport:
    protocol: str
    config_hash: str
    samples: int
    metrics: Dict[str, float] = field(default_factory=dict)
    absent: Dict[str, str] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_key_values(self) -> str:
        lines = [f"protocol={self.protocol}", f"config_hash={self.config_hash}", f"samples={self.samples}"]
        for key in REPORT_KEYS:
            if key in self.metrics:
                lines.append(f"{key}={self.metrics[key]!r}")
            elif key in self.absent:
                lines.append(f"{key}=absent")
        return "\n".join(lines) + "\n"

    def write(self, prefix: str) -> Tuple[str, str]:
        json_path, text_path = f"{prefix}.json", f"{prefix}.txt"
        atomic_write_text(json_path, self.to_json())
        atomic_write_text(text_path, self.to_key_values())
        return json_path, text_path


class EvaluationHandler:
    def _jobs(self, items: List[DatasetItem], protocol: str, config: ExperimentConfig) -> List[SampleJob]:
        jobs = []
        for index, item in enumerate(items):
            jobs.append(SampleJob(
                label=item.text,
                text=None if protocol == "audio" else item.text,
                frames=item.motion.frames,
                seed=config.seeds.sample + index,
                audio=item.audio.as_condition() if protocol in ("audio", "multi") else None,
            ))
        return jobs

    def _mm_jobs(self, items: List[DatasetItem], protocol: str, config: ExperimentConfig) -> List[SampleJob]:
        jobs = []
        seen = {}
        for item in items:
            seen.setdefault(item.text, item)
        for group, (label, item) in enumerate(sorted(seen.items())):
            for k in range(config.eval.mm_samples):
                jobs.append(SampleJob(
                    label=label,
                    text=None if protocol == "audio" else label,
                    frames=item.motion.frames,
                    seed=config.seeds.sample + _MM_SEED_OFFSET + group * config.eval.mm_samples + k,
                    audio=item.audio.as_condition() if protocol in ("audio", "multi") else None,
                ))
        return jobs

    def _run(self, ckpt: Checkpoint, jobs: List[SampleJob], workers: int) -> List[MotionSeq]:
        def draw(job: SampleJob) -> MotionSeq:
            return sampling_handler.generate(ckpt, job.text, job.frames, job.seed, job.audio)

        if workers <= 1 or len(jobs) <= 1:
            return [draw(job) for job in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(draw, jobs))

    @log_performance('metrics')
    def evaluate(self, config: ExperimentConfig, dataset: SyntheticDataset, ckpt: Optional[Checkpoint] = None,
                 protocol: Optional[str] = None) -> MetricsReport:
        protocol = protocol or config.eval.protocol
        if protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got '{protocol}'")
        if protocol != "gt" and ckpt is None:
            raise ConfigError(f"protocol '{protocol}' needs a checkpoint")
        if protocol in ("audio", "multi") and ckpt.stage == "main":
            raise ConfigError(f"protocol '{protocol}' needs a control or finetune checkpoint")

        items = dataset.audio_items() if protocol in ("audio", "multi") else list(dataset.items)
        if not items:
            raise DataError(f"the dataset has no items usable under protocol '{protocol}'")
        ev = config.eval
        metrics_logger.info(f"🚀 Evaluating protocol '{protocol}' over {len(items)} items")

        gt_motions = [item.motion for item in dataset.items]
        gt_labels = [item.text for item in dataset.items]
        if protocol == "gt":
            generated = [item.motion for item in items]
            mm_groups = [[item.motion for item in group] for _, group in sorted(dataset.by_label().items())]
        else:
            generated = self._run(ckpt, self._jobs(items, protocol, config), ev.workers)
            mm_jobs = self._mm_jobs(items, protocol, config)
            mm_motions = self._run(ckpt, mm_jobs, ev.workers)
            grouped: Dict[str, List[MotionSeq]] = {}
            for job, motion in zip(mm_jobs, mm_motions):
                grouped.setdefault(job.label, []).append(motion)
            mm_groups = [grouped[label] for label in sorted(grouped)]
        labels = [item.text for item in items]

        report = MetricsReport(protocol=protocol, config_hash=config.config_hash(), samples=len(generated),
                               config=config.to_dict())
        up = ev.upsample_fps
        features: Dict[str, np.ndarray] = {}

        def mark_absent(keys, error: ContractError) -> None:
            for key in keys:
                report.absent[key] = str(error)
            metrics_logger.warning(f"⚠️ {', '.join(keys)} absent: {error}")

        def record(keys, compute: Callable[[], Any]) -> None:
            keys = (keys,) if isinstance(keys, str) else keys
            try:
                values = compute()
            except ContractError as e:
                mark_absent(keys, e)
                return
            values = (values,) if len(keys) == 1 else values
            for key, value in zip(keys, values):
                report.metrics[key] = float(value)

        for kind, suffix in (("kinetic", "k"), ("geometric", "g")):
            try:
                features[f"gt_{suffix}"] = feature_matrix(gt_motions, kind, upsample_fps=up)
                features[suffix] = feature_matrix(generated, kind, upsample_fps=up)
            except ContractError as e:
                features.pop(f"gt_{suffix}", None)
                mark_absent((f"fid_{suffix}", f"diversity_{suffix}", f"gt_diversity_{suffix}"), e)
                continue
            record(f"fid_{suffix}", lambda s=suffix: frechet_distance(
                FeatureStats.from_features(features[f"gt_{s}"]), FeatureStats.from_features(features[s])))
            record(f"diversity_{suffix}", lambda s=suffix: diversity(
                features[s], ev.diversity_pairs, make_rng(config.seeds.sample, "diversity", s)))
            record(f"gt_diversity_{suffix}", lambda s=suffix: diversity(
                features[f"gt_{s}"], ev.diversity_pairs, make_rng(config.seeds.sample, "gt_diversity", s)))

        def mm_score() -> float:
            if ev.mm_samples < 2 and protocol != "gt":
                raise ContractError(f"multimodality needs at least 2 samples per text, got {ev.mm_samples}")
            return multimodality([feature_matrix(group, "kinetic", upsample_fps=up) for group in mm_groups])

        record("multimodality", mm_score)
        record("bas", lambda: self._bas(generated, items, ev.smooth_window, ev.bas_sigma))

        def retrieval():
            evaluator = PrototypeEvaluator(upsample_fps=up).fit(gt_labels, gt_motions)
            scores = r_precision_mm_dist(evaluator.embed_texts(labels), evaluator.embed_motions(generated),
                                         pool=ev.r_precision_pool, rng=make_rng(config.seeds.sample, "r_precision"))
            return scores.top1, scores.top2, scores.top3, scores.mm_dist

        record(("r_precision_top1", "r_precision_top2", "r_precision_top3", "mm_dist"), retrieval)

        def label_accuracy() -> float:
            if "k" not in features:
                raise ContractError("kinetic features are unavailable for these samples")
            return float(np.mean([
                classify_by_kinetics(row, features["gt_k"], gt_labels) == label
                for row, label in zip(features["k"], labels)
            ]))

        record("label_accuracy", label_accuracy)

        for key in REPORT_KEYS:
            if key in report.metrics:
                metrics_logger.info(f"📊 {key} = {report.metrics[key]:.6f}")
        metrics_logger.info(f"✅ Evaluation done: {len(report.metrics)} metrics, {len(report.absent)} absent")
        return report

    def _bas(self, generated: List[MotionSeq], items: List[DatasetItem], smooth_window: int, sigma: float) -> float:
        scores = []
        for motion, item in zip(generated, items):
            if item.audio is None or item.audio.source != "music" or len(item.audio.beat_times) == 0:
                continue
            music = BeatSequence(item.audio.beat_times)
            scores.append(beat_align_score(kinematic_beats(motion, smooth_window), music, sigma))
        if not scores:
            raise ContractError("no music-paired items to score beat alignment on")
        return float(np.mean(scores))

    def evaluate_cmd(self, config: ExperimentConfig, dataset: SyntheticDataset, ckpt: Optional[Checkpoint],
                     protocol: Optional[str], out_prefix: str) -> MetricsReport:
        report = self.evaluate(config, dataset, ckpt, protocol)
        os.makedirs(os.path.dirname(os.path.abspath(out_prefix)), exist_ok=True)
        json_path, text_path = report.write(out_prefix)
        metrics_logger.info(f"💾 Report written to {json_path} and {text_path}")
        return report


evaluation_handler = EvaluationHandler()
