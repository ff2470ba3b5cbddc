# Metrics package: Frechet distance, motion features, diversity, retrieval, beat alignment

from .frechet import frechet_distance, frechet_from_features, psd_sqrt
from .features import feature_matrix, geometric_features, kinetic_features
from .diversity import diversity, multimodality
from .retrieval import RetrievalScores, classify_by_kinetics, r_precision_mm_dist
from .beats import beat_align_score, beats_from_speed, joint_speed, kinematic_beats

__all__ = [
    'frechet_distance', 'frechet_from_features', 'psd_sqrt', 'feature_matrix', 'geometric_features',
    'kinetic_features', 'diversity', 'multimodality', 'RetrievalScores', 'classify_by_kinetics',
    'r_precision_mm_dist', 'beat_align_score', 'beats_from_speed', 'joint_speed', 'kinematic_beats',
]
