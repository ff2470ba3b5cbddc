from typing import Dict, Optional

from ..motion.io import export_features_csv, export_positions_json, load_motion
from ..motion.representation import decode
from ..utils.errors import ConfigError
from ..utils.logging import get_logger

motion_logger = get_logger('motion_pipeline')


class ExportHandler:
    def export(self, motion_path: str, json_path: Optional[str] = None,
               csv_path: Optional[str] = None) -> Dict[str, str]:
        """Motion file -> decoded joint positions (JSON) and/or per-frame features (CSV)"""
        if not json_path and not csv_path:
            raise ConfigError("nothing to export: give a JSON and/or CSV destination")
        motion, header = load_motion(motion_path)
        written = {}
        if json_path:
            export_positions_json(json_path, decode(motion))
            written["json"] = json_path
        if csv_path:
            export_features_csv(csv_path, motion)
            written["csv"] = csv_path
        motion_logger.info(f"✅ Exported {motion_path} (config {header.get('config_hash', '')[:12]}) -> {written}")
        return written


export_handler = ExportHandler()
