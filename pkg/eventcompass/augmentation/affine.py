"""
2D 아핀 증강

T 는 x★ 픽셀 좌표를 x⁺ 픽셀 좌표로 보낸다: x★(p) = x⁺(T p).
"""

from typing import Tuple

import numpy as np

from ..config.settings import AugmentConfig
from ..core.geometry import AffineTransform2D, about_center, warp_image
from ..core.models import EventImage

MAX_ANGLE_DEG = 45.0
MIN_SCALE = 0.1
MAX_TRANSLATE_FRACTION = 0.5


def _clamped_ranges(config: AugmentConfig):
    rotation = float(np.clip(abs(config.rotation_deg), 0.0, MAX_ANGLE_DEG))
    shear = float(np.clip(abs(config.shear_deg), 0.0, MAX_ANGLE_DEG))
    low, high = sorted(max(MIN_SCALE, float(v)) for v in config.scale_range)
    translate = float(np.clip(abs(config.translate_fraction), 0.0, MAX_TRANSLATE_FRACTION))
    return rotation, (low, high), translate, shear


def affine_matrix(angle_deg: float, scale: Tuple[float, float], shear_deg: float) -> np.ndarray:
    """A = R(θ) · diag(sx, sy) · Shear(φ)"""
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    rotation = np.array([[c, -s], [s, c]])
    scaling = np.diag([scale[0], scale[1]])
    shear = np.array([[1.0, np.tan(np.deg2rad(shear_deg))], [0.0, 1.0]])
    return rotation @ scaling @ shear


def sample_affine(rng: np.random.Generator, config: AugmentConfig,
                  size: Tuple[int, int]) -> AffineTransform2D:
    """이미지 중심 기준 무작위 아핀 변환 (범위는 clamp)"""
    height, width = size
    rotation, (scale_low, scale_high), translate, shear = _clamped_ranges(config)

    angle = rng.uniform(-rotation, rotation)
    scale = (rng.uniform(scale_low, scale_high), rng.uniform(scale_low, scale_high))
    shear_angle = rng.uniform(-shear, shear)
    translation = (rng.uniform(-translate, translate) * width,
                   rng.uniform(-translate, translate) * height)

    return about_center(affine_matrix(angle, scale, shear_angle), translation, size)


def apply_affine(image: EventImage, transform: AffineTransform2D) -> EventImage:
    """bilinear 재샘플링 + 0 패딩 (항등 변환은 입력 그대로)"""
    return image.with_values(warp_image(image.values, transform))
