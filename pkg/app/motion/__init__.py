# Motion package: skeleton description, 263-dim codec, motion files

from .skeleton import PlaneTest, Skeleton, load_skeleton
from .representation import (
    FeatureNormalizer,
    bone_length_drift,
    decode,
    encode,
    feature_channel_names,
    foot_contacts,
    forward_kinematics,
    resample,
    resample_fps,
    root_local_positions,
)
from .io import export_features_csv, export_positions_json, load_motion, save_motion

__all__ = [
    'PlaneTest', 'Skeleton', 'load_skeleton', 'FeatureNormalizer', 'bone_length_drift',
    'decode', 'encode', 'feature_channel_names', 'foot_contacts', 'forward_kinematics',
    'resample', 'resample_fps', 'root_local_positions', 'export_features_csv',
    'export_positions_json', 'load_motion', 'save_motion',
]
