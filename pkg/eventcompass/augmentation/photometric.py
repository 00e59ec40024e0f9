"""
이벤트 이미지 GaussianBlur / ColorJitter

ColorJitter 는 정규화된 복셀 채널별 scale·offset 으로 해석하며
0 이 아닌 셀에만 적용한다.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from ..config.settings import AugmentConfig
from ..core.models import EventImage

BLUR_TRUNCATE = 4.0


@dataclass
class PhotometricParams:
    """실제로 적용된 blur / jitter 파라미터"""
    blur_sigma: Optional[float] = None
    jitter_scale: List[float] = field(default_factory=list)
    jitter_offset: List[float] = field(default_factory=list)

    @property
    def is_identity(self) -> bool:
        return self.blur_sigma is None and not self.jitter_scale

    def to_dict(self) -> Dict:
        return {
            'blur_sigma': self.blur_sigma,
            'jitter_scale': list(self.jitter_scale),
            'jitter_offset': list(self.jitter_offset),
        }


def gaussian_blur(values: np.ndarray, sigma: float) -> np.ndarray:
    """채널별 2D 가우시안 블러 (바깥은 0)"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        return ndimage.gaussian_filter(values, sigma=sigma, mode='constant', truncate=BLUR_TRUNCATE)
    return np.stack([
        ndimage.gaussian_filter(channel, sigma=sigma, mode='constant', truncate=BLUR_TRUNCATE)
        for channel in values
    ])


def channel_jitter(values: np.ndarray, scales: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """v ← s_c·v + o_c (0 이 아닌 셀만)"""
    support = values != 0
    jittered = values * scales[:, None, None] + offsets[:, None, None]
    return np.where(support, jittered, 0.0)


def blur_and_jitter(image: EventImage, rng: np.random.Generator,
                    config: AugmentConfig) -> Tuple[EventImage, PhotometricParams]:
    """확률적 blur 후 jitter, 적용된 파라미터와 함께 반환"""
    values = np.array(image.values, dtype=np.float64)
    params = PhotometricParams()

    if rng.random() < config.blur_probability:
        params.blur_sigma = float(rng.uniform(*config.blur_sigma_range))
        values = gaussian_blur(values, params.blur_sigma)

    if rng.random() < config.jitter_probability:
        scales = rng.uniform(*config.jitter_scale_range, size=image.channels)
        offsets = rng.uniform(*config.jitter_offset_range, size=image.channels)
        values = channel_jitter(values, scales, offsets)
        params.jitter_scale = scales.tolist()
        params.jitter_offset = offsets.tolist()

    return image.with_values(values), params
