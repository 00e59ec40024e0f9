"""
증강 쌍 (x⁺, x★) 생성
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..config.settings import AugmentConfig
from ..core.exceptions import ShapeError
from ..core.geometry import AffineTransform2D
from ..core.models import EventImage
from .affine import apply_affine, sample_affine
from .patches import CorrespondenceMap, PatchGrid, build_correspondence
from .photometric import PhotometricParams, blur_and_jitter


@dataclass
class AugmentedPair:
    """x⁺ (원본) 와 x★ (아핀 + blur + jitter)"""
    x_plus: EventImage
    x_star: EventImage
    transform: AffineTransform2D
    photometric: PhotometricParams
    correspondence: CorrespondenceMap

    def __post_init__(self):
        if self.x_plus.values.shape != self.x_star.values.shape:
            raise ShapeError(f"x⁺ {self.x_plus.values.shape} 와 x★ {self.x_star.values.shape} 모양 불일치")

    def to_dict(self) -> Dict:
        return {
            'transform': self.transform.to_list(),
            'photometric': self.photometric.to_dict(),
            'valid_patches': self.correspondence.num_valid,
        }


def build_augmented_pair(x_plus: EventImage, rng: np.random.Generator, config: AugmentConfig,
                         grid: PatchGrid) -> AugmentedPair:
    """아핀 변환 후 GaussianBlur / ColorJitter 로 x★ 생성"""
    size = (x_plus.height, x_plus.width)
    transform = sample_affine(rng, config, size)
    warped = apply_affine(x_plus, transform)
    x_star, photometric = blur_and_jitter(warped, rng, config)
    correspondence = build_correspondence(transform, grid, *size)
    return AugmentedPair(x_plus, x_star, transform, photometric, correspondence)
