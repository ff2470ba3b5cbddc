from typing import Any, Dict, Optional, Tuple

from ..config import MOTION_FPS
from ..models.dataset import DatasetItem, SyntheticDataset
from ..models.experiment import ExperimentConfig
from ..motion.representation import encode
from ..motion.skeleton import load_skeleton
from ..motion.synthetic import generate_motion, program_for
from ..services.audio import synth_audio_features, synth_speech_features
from ..utils.container import DATASET_MAGIC, read_container, write_container
from ..utils.errors import ConfigError, DataError
from ..utils.logging import get_logger, log_performance
from ..utils.rng import make_rng

# Setup dedicated logger for the motion pipeline
motion_logger = get_logger('motion_pipeline')


class DatasetHandler:
    def __init__(self):
        self.skeleton = load_skeleton()

    @log_performance('motion_pipeline')
    def generate(self, config: ExperimentConfig, seed: Optional[int] = None) -> SyntheticDataset:
        """
        Procedural (motion, text, audio) triples.

        Labels are assigned round-robin. Beat-locked labels get music whose
        beats coincide with the motion's halts; other labels get audio only
        when `audio_for_all_labels` is set, then speech with probability
        `speech_ratio`, otherwise unrelated music.
        """
        data = config.data
        seed = config.seeds.data if seed is None else seed
        labels = list(dict.fromkeys(data.labels))
        if len(labels) < 2:
            raise ConfigError("the dataset needs at least 2 distinct text labels")

        fps = float(MOTION_FPS)
        duration = data.frames / fps
        audio_dim = config.model.audio_dim
        motion_logger.info(f"🚀 Generating {data.num_sequences} sequences over {len(labels)} labels (seed {seed})")

        items = []
        for index in range(data.num_sequences):
            label = labels[index % len(labels)]
            program = program_for(label)
            rng = make_rng(seed, "sequence", index)
            bpm = data.bpms[(index // len(labels)) % len(data.bpms)]
            phase = float(rng.uniform(0.0, 60.0 / bpm))

            positions, params = generate_motion(program, data.frames, rng, fps=fps, bpm=bpm, phase=phase,
                                                skeleton=self.skeleton)
            motion = encode(positions, self.skeleton, data.contact_threshold)

            audio = None
            if program.beat_locked:
                audio = synth_audio_features(bpm, duration, audio_dim, seed=rng, fps=fps, phase=phase)
            elif data.audio_for_all_labels:
                if rng.uniform() < data.speech_ratio:
                    audio = synth_speech_features(duration, audio_dim, seed=rng, fps=fps)
                else:
                    audio = synth_audio_features(bpm, duration, audio_dim, seed=rng, fps=fps,
                                                 phase=float(rng.uniform(0.0, 60.0 / bpm)))
            items.append(DatasetItem(motion=motion, text=label, audio=audio, meta={"index": index, **params}))

        dataset = SyntheticDataset(items=items, seed=seed, config_hash=config.config_hash())
        motion_logger.info(f"✅ Generated {len(dataset)} sequences, {len(dataset.audio_items())} with audio")
        return dataset

    def save(self, path: str, dataset: SyntheticDataset, config: Optional[ExperimentConfig] = None) -> None:
        arrays, records = dataset.to_arrays()
        meta: Dict[str, Any] = {"items": records}
        if config is not None:
            meta["config"] = config.to_dict()
        write_container(path, DATASET_MAGIC, arrays, kind="dataset",
                        config_hash=dataset.config_hash, seed=dataset.seed, meta=meta)
        motion_logger.info(f"💾 Saved dataset ({len(dataset)} items) to {path}")

    def load(self, path: str) -> Tuple[SyntheticDataset, Dict[str, Any]]:
        header, arrays = read_container(path, DATASET_MAGIC)
        if header.get("kind") != "dataset":
            raise DataError(f"{path} is not a dataset file")
        records = header.get("meta", {}).get("items")
        if not records:
            raise DataError(f"{path} holds no dataset records")
        dataset = SyntheticDataset.from_arrays(arrays, records, seed=header.get("seed") or 0,
                                               config_hash=header.get("config_hash", ""))
        motion_logger.info(f"📂 Loaded dataset ({len(dataset)} items) from {path}")
        return dataset, header


def gen_dataset(config: ExperimentConfig, seed: Optional[int] = None) -> SyntheticDataset:
    return dataset_handler.generate(config, seed)


dataset_handler = DatasetHandler()
