from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..utils.errors import ContractError, DataError
from .conditions import SyntheticAudio
from .motion import MotionSeq


@dataclass
class DatasetItem:
    """One (motion, text, optional audio) triple"""
    motion: MotionSeq
    text: str
    audio: Optional[SyntheticAudio] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.audio is not None and self.audio.frames != self.motion.frames:
            raise DataError(f"audio has {self.audio.frames} frames, motion has {self.motion.frames}")
        if self.audio is not None and self.audio.fps != self.motion.fps:
            raise DataError("audio and motion frame rates differ")


@dataclass
class SyntheticDataset:
    items: List[DatasetItem]
    seed: int
    config_hash: str = ""

    def __len__(self) -> int:
        return len(self.items)

    @property
    def labels(self) -> List[str]:
        return sorted({item.text for item in self.items})

    def by_label(self) -> Dict[str, List[DatasetItem]]:
        groups: Dict[str, List[DatasetItem]] = {}
        for item in self.items:
            groups.setdefault(item.text, []).append(item)
        return groups

    def audio_items(self) -> List[DatasetItem]:
        return [item for item in self.items if item.audio is not None]

    def to_arrays(self) -> Tuple[Dict[str, np.ndarray], List[Dict[str, Any]]]:
        """Flat array map plus per-item metadata, for the container format"""
        arrays: Dict[str, np.ndarray] = {}
        records = []
        for index, item in enumerate(self.items):
            key = f"item.{index:04d}"
            arrays[f"{key}.motion"] = item.motion.features
            record = {"text": item.text, "fps": item.motion.fps, "meta": item.meta, "audio": None}
            if item.audio is not None:
                arrays[f"{key}.audio"] = item.audio.features
                arrays[f"{key}.beats"] = item.audio.beat_times
                record["audio"] = {"source": item.audio.source, "meta": item.audio.meta}
            records.append(record)
        return arrays, records

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], records: List[Dict[str, Any]], seed: int,
                    config_hash: str = "") -> 'SyntheticDataset':
        items = []
        for index, record in enumerate(records):
            key = f"item.{index:04d}"
            try:
                motion = MotionSeq(features=arrays[f"{key}.motion"], fps=record["fps"])
                audio = None
                if record.get("audio") is not None:
                    audio = SyntheticAudio(
                        features=arrays[f"{key}.audio"],
                        beat_times=arrays[f"{key}.beats"],
                        fps=record["fps"],
                        source=record["audio"]["source"],
                        meta=record["audio"].get("meta", {}),
                    )
            except KeyError as e:
                raise DataError(f"dataset file is missing {e}") from e
            items.append(DatasetItem(motion=motion, text=record["text"], audio=audio, meta=record.get("meta", {})))
        if not items:
            raise ContractError("dataset file holds no items")
        return cls(items=items, seed=seed, config_hash=config_hash)
