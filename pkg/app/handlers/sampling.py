import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

from ..config import MAX_FRAMES
from ..models.conditions import AudioCondition
from ..models.motion import JointPositions, MotionSeq
from ..motion.io import export_positions_json, save_motion
from ..motion.representation import decode
from ..network.checkpoint import Checkpoint, load_checkpoint
from ..network.diffusion import sample
from ..services.audio import read_audio_features
from ..utils.errors import ConfigError
from ..utils.logging import get_logger, log_performance
from ..utils.rng import make_rng
from .training import schedule_for, text_context

sampling_logger = get_logger('sampling')


@dataclass
class SampleResult:
    motion: MotionSeq
    positions: JointPositions
    motion_path: Optional[str] = None
    positions_path: Optional[str] = None
    used_audio: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames": self.motion.frames,
            "motion_path": self.motion_path,
            "positions_path": self.positions_path,
            "used_audio": self.used_audio,
        }


class SamplingHandler:
    def generate(self, ckpt: Checkpoint, text: Optional[str], frames: int, seed: int,
                 audio: Optional[AudioCondition] = None, progress: bool = False) -> MotionSeq:
        """
        Draw one motion. Text-only requests run the main branch alone; with
        audio, a control or finetune checkpoint routes through its audio path.
        A missing text uses the null (all-zero) context.
        """
        if not 1 <= frames <= MAX_FRAMES:
            raise ConfigError(f"frames must lie in [1, {MAX_FRAMES}], got {frames}")
        config = ckpt.config
        context = text_context(config, text) if text else ckpt.main.null_context()
        features = None if audio is None else audio.features
        if features is not None and ckpt.stage == "main":
            sampling_logger.warning("⚠️ Main-branch checkpoint has no audio path; audio is ignored")
            features = None

        def predict(x_t, t, ctx):
            return ckpt.predict(x_t, t, ctx, features)

        guidance = config.schedule.guidance_scale
        x = sample(
            predict,
            frames,
            context,
            schedule_for(config),
            make_rng(seed, "sample"),
            clamp_x_start=config.schedule.clamp_x_start,
            guidance_scale=guidance,
            null_ctx=ckpt.main.null_context() if guidance != 1.0 else None,
            progress=progress,
        )
        return MotionSeq.from_prediction(ckpt.normalizer.denormalize(x))

    @log_performance('sampling')
    def sample_cmd(self, checkpoint_path: str, text: str, out_path: str, audio_path: Optional[str] = None,
                   frames: Optional[int] = None, seed: Optional[int] = None,
                   positions_path: Optional[str] = None) -> SampleResult:
        ckpt = load_checkpoint(checkpoint_path)
        frames = ckpt.config.data.frames if frames is None else frames
        seed = ckpt.config.seeds.sample if seed is None else seed
        audio = read_audio_features(audio_path) if audio_path else None

        sampling_logger.info(f"🚀 Sampling {frames} frames for '{text}' (seed {seed}, audio={bool(audio_path)})")
        motion = self.generate(ckpt, text, frames, seed, audio, progress=True)
        positions = decode(motion)

        used_audio = audio is not None and ckpt.stage != "main"
        meta = {"text": text, "checkpoint_stage": ckpt.stage, "audio": os.path.basename(audio_path) if audio_path else None}
        save_motion(out_path, motion, config_hash=ckpt.config.config_hash(), seed=seed, meta=meta)
        if positions_path:
            export_positions_json(positions_path, positions)
        sampling_logger.info(f"✅ Wrote {out_path} ({'text+audio' if used_audio else 'text only'})")
        return SampleResult(motion, positions, out_path, positions_path, used_audio)


def sample_cmd(checkpoint_path: str, text: str, out_path: str, **kwargs) -> SampleResult:
    return sampling_handler.sample_cmd(checkpoint_path, text, out_path, **kwargs)


sampling_handler = SamplingHandler()
