"""
EventCompass Evaluation Module

고정 특징 선형 프로브와 mIoU 평가
"""

from .probe import (
    FeatureSet, ProbeHead, ProbeReport, ProbeSummary,
    patch_labels, extract_features, save_features, load_features, load_backbone, random_backbone,
    train_probe, evaluate_miou, miou_from_predictions, run_probe
)

__all__ = [
    "FeatureSet", "ProbeHead", "ProbeReport", "ProbeSummary",
    "patch_labels", "extract_features", "save_features", "load_features", "load_backbone", "random_backbone",
    "train_probe", "evaluate_miou", "miou_from_predictions", "run_probe"
]
