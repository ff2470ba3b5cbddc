"""
Experiment configuration: one declarative YAML file per experiment, parsed
into a tree of dataclasses. Every stochastic stage draws from an explicit seed.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..config import (
    BLOCK_SPEC, MODEL_WIDTH, MODEL_HEADS, MODEL_GROUPS, MODEL_LAYERS, BLOCK_LN_EPS,
    TEXT_CONTEXT_DIM, AUDIO_FEATURE_DIM, DIFFUSION_STEPS, BETA_START, BETA_END,
    GUIDANCE_SCALE, LEARNING_RATE, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, MAX_FRAMES,
    CONTACT_THRESHOLD, R_PRECISION_POOL, MULTIMODALITY_SAMPLES, DIVERSITY_PAIRS,
    BAS_SIGMA, BEAT_SMOOTH_WINDOW, EVAL_WORKERS, OUTPUT_DIR,
)
from ..utils.errors import ConfigError

BLOCK_TOKENS = ("T", "CS", "CA", "F")
STAGES = ("main", "control", "single_branch_finetune")
PROTOCOLS = ("gt", "text", "audio", "multi")
NORM_POSITIONS = ("pre", "post")

# The module orders compared in the multi-wise attention ablation
ABLATION_ORDERS = ("T/CA/F", "T/CA/F/T/F", "T/F/T/CA/F", "T/CA/F/CS/F", "CS/F/T/CA/F")


def parse_block_order(order: str) -> Tuple[str, ...]:
    """'CS/F/T/CA/F' -> ('CS', 'F', 'T', 'CA', 'F')"""
    if not isinstance(order, str) or not order.strip():
        raise ConfigError("block order string is empty")
    tokens = tuple(token.strip() for token in order.split("/"))
    unknown = [token for token in tokens if token not in BLOCK_TOKENS]
    if unknown:
        raise ConfigError(f"Unknown block token(s) {unknown} in '{order}', expected {BLOCK_TOKENS}")
    return tokens


@dataclass(frozen=True)
class BlockSpec:
    """Module order and widths of one multi-wise attention stack"""
    order: Tuple[str, ...] = parse_block_order(BLOCK_SPEC)
    width: int = MODEL_WIDTH
    heads: int = MODEL_HEADS
    groups: int = MODEL_GROUPS
    ffn_width: int = 4 * MODEL_WIDTH
    layer_count: int = MODEL_LAYERS
    context_dim: int = TEXT_CONTEXT_DIM
    norm_position: str = "pre"
    ln_eps: float = BLOCK_LN_EPS

    def __post_init__(self):
        if not self.order:
            raise ConfigError("block order is empty")
        for token in self.order:
            if token not in BLOCK_TOKENS:
                raise ConfigError(f"Unknown block token '{token}'")
        if self.width % self.heads:
            raise ConfigError(f"width {self.width} is not divisible by heads {self.heads}")
        if self.width % self.groups:
            raise ConfigError(f"width {self.width} is not divisible by groups {self.groups}")
        if self.norm_position not in NORM_POSITIONS:
            raise ConfigError(f"norm_position must be one of {NORM_POSITIONS}")
        if self.layer_count < 1 or self.ffn_width < 1:
            raise ConfigError("layer_count and ffn_width must be positive")

    @classmethod
    def parse(cls, order: str, **kwargs) -> 'BlockSpec':
        return cls(order=parse_block_order(order), **kwargs)

    @property
    def order_string(self) -> str:
        return "/".join(self.order)


@dataclass
class ModelConfig:
    block_spec: str = BLOCK_SPEC
    width: int = MODEL_WIDTH
    heads: int = MODEL_HEADS
    groups: int = MODEL_GROUPS
    ffn_width: Optional[int] = None  # defaults to 4 * width
    layers: int = MODEL_LAYERS
    context_dim: int = TEXT_CONTEXT_DIM
    audio_dim: int = AUDIO_FEATURE_DIM
    norm_position: str = "pre"
    ln_eps: float = BLOCK_LN_EPS

    def to_block_spec(self) -> BlockSpec:
        return BlockSpec.parse(
            self.block_spec,
            width=self.width,
            heads=self.heads,
            groups=self.groups,
            ffn_width=self.ffn_width or 4 * self.width,
            layer_count=self.layers,
            context_dim=self.context_dim,
            norm_position=self.norm_position,
            ln_eps=self.ln_eps,
        )


@dataclass
class ScheduleConfig:
    steps: int = DIFFUSION_STEPS
    beta_start: float = BETA_START
    beta_end: float = BETA_END
    clamp_x_start: Optional[float] = None  # None leaves predictions unclamped
    guidance_scale: float = GUIDANCE_SCALE


@dataclass
class OptimConfig:
    lr: float = LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    train_steps: int = 500
    control_steps: int = 200
    batch_size: int = 2
    log_every: int = 10


@dataclass
class DataConfig:
    num_sequences: int = 8
    frames: int = 40
    labels: List[str] = field(default_factory=lambda: ["walk forward", "dance to the beat"])
    bpms: List[float] = field(default_factory=lambda: [120.0])
    contact_threshold: float = CONTACT_THRESHOLD
    speech_ratio: float = 0.0  # share of audio-bearing items driven by speech onsets
    audio_for_all_labels: bool = False


@dataclass
class EvalConfig:
    protocol: str = "text"
    mm_samples: int = MULTIMODALITY_SAMPLES
    r_precision_pool: int = R_PRECISION_POOL
    diversity_pairs: int = DIVERSITY_PAIRS
    bas_sigma: float = BAS_SIGMA
    smooth_window: int = BEAT_SMOOTH_WINDOW
    upsample_fps: Optional[float] = None
    workers: int = EVAL_WORKERS


@dataclass
class SeedConfig:
    data: int = 0
    model: int = 1
    train: int = 2
    sample: int = 3


_SECTIONS = {
    "model": ModelConfig,
    "schedule": ScheduleConfig,
    "optim": OptimConfig,
    "data": DataConfig,
    "eval": EvalConfig,
    "seeds": SeedConfig,
}


def _build_section(cls, values: Optional[Dict[str, Any]], section: str):
    values = values or {}
    if not isinstance(values, dict):
        raise ConfigError(f"Section '{section}' must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"Unknown key(s) {unknown} in section '{section}'")
    return cls(**values)


@dataclass
class ExperimentConfig:
    name: str = "toy"
    stage: str = "main"
    output_dir: str = OUTPUT_DIR
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    data: DataConfig = field(default_factory=DataConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.stage not in STAGES:
            raise ConfigError(f"stage must be one of {STAGES}, got '{self.stage}'")
        self.model.to_block_spec()
        if self.model.context_dim < 1 or self.model.audio_dim < 1:
            raise ConfigError("context_dim and audio_dim must be positive")
        s = self.schedule
        if s.steps < 1 or not 0.0 < s.beta_start < s.beta_end < 1.0:
            raise ConfigError("schedule needs steps >= 1 and 0 < beta_start < beta_end < 1")
        d = self.data
        if not 2 <= d.frames <= MAX_FRAMES:
            raise ConfigError(f"frames must lie in [2, {MAX_FRAMES}], got {d.frames}")
        if len(set(d.labels)) < 2:
            raise ConfigError("the dataset needs at least 2 distinct text labels")
        if d.num_sequences < len(set(d.labels)):
            raise ConfigError("num_sequences must cover every label at least once")
        if not d.bpms or any(b <= 0 for b in d.bpms):
            raise ConfigError("bpms must be a non-empty list of positive tempos")
        if not 0.0 <= d.speech_ratio <= 1.0:
            raise ConfigError("speech_ratio must lie in [0, 1]")
        if self.eval.protocol not in PROTOCOLS:
            raise ConfigError(f"eval.protocol must be one of {PROTOCOLS}")
        if self.eval.smooth_window < 1 or self.eval.smooth_window % 2 == 0:
            raise ConfigError("eval.smooth_window must be a positive odd integer")
        if self.eval.bas_sigma <= 0:
            raise ConfigError("eval.bas_sigma must be positive")
        for name, seed in asdict(self.seeds).items():
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ConfigError(f"seed '{name}' must be an explicit non-negative integer")
        if self.optim.batch_size < 1 or self.optim.log_every < 1:
            raise ConfigError("batch_size and log_every must be positive")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Create an ExperimentConfig from a (YAML-loaded) dictionary"""
        data = dict(data or {})
        known = {"name", "stage", "output_dir"} | set(_SECTIONS)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown top-level key(s) {unknown}")
        sections = {key: _build_section(cls_, data.get(key), key) for key, cls_ in _SECTIONS.items()}
        try:
            return cls(
                name=data.get("name", "toy"),
                stage=data.get("stage", "main"),
                output_dir=data.get("output_dir", OUTPUT_DIR),
                **sections,
            )
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        """Convert ExperimentConfig to a plain dictionary"""
        return asdict(self)

    @classmethod
    def from_yaml(cls, path: str) -> 'ExperimentConfig':
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {path}: {e}") from e
        return cls.from_dict(data or {})

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON form; embedded in every report and checkpoint"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **sections: Dict[str, Any]) -> 'ExperimentConfig':
        data = self.to_dict()
        for key, values in sections.items():
            if isinstance(values, dict) and isinstance(data.get(key), dict):
                data[key].update(values)
            else:
                data[key] = values
        return ExperimentConfig.from_dict(data)
