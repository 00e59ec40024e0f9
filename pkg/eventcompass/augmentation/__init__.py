"""
EventCompass Augmentation Module

아핀 / 광도 증강, 패치 격자와 대응, 마스크 샘플링
"""

from .affine import sample_affine, apply_affine
from .photometric import blur_and_jitter, gaussian_blur, PhotometricParams
from .patches import PatchGrid, CorrespondenceMap, MaskVector, INVALID, build_correspondence, sample_mask
from .pipeline import AugmentedPair, build_augmented_pair

__all__ = [
    "sample_affine", "apply_affine",
    "blur_and_jitter", "gaussian_blur", "PhotometricParams",
    "PatchGrid", "CorrespondenceMap", "MaskVector", "INVALID", "build_correspondence", "sample_mask",
    "AugmentedPair", "build_augmented_pair"
]
