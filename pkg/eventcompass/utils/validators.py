"""
데이터 검증 유틸리티
"""

import math
from typing import Tuple

from ..core.exceptions import ConfigError


def validate_positive(key: str, value) -> bool:
    """양수 검증"""
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def validate_non_negative(key: str, value) -> bool:
    """0 이상 검증"""
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 0


def validate_probability(value) -> bool:
    """확률 값 [0, 1] 검증"""
    return isinstance(value, (int, float)) and 0.0 <= value <= 1.0


def validate_range(value: Tuple[float, float]) -> bool:
    """(low, high) 구간 검증"""
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        return False
    low, high = value
    return math.isfinite(low) and math.isfinite(high) and low <= high


def validate_patch_size(image_size: int, patch_size: int) -> bool:
    """패치 크기가 이미지 크기를 나누는지 검증"""
    return patch_size > 0 and image_size % patch_size == 0


def require(condition: bool, message: str, key: str = None):
    """조건 불만족 시 ConfigError"""
    if not condition:
        raise ConfigError(message, key=key)


def validate_config_value(key: str, value) -> bool:
    """설정 값 유효성 검증 (dotted key 기준)"""
    section, _, name = key.partition('.')

    if name in ('lambda_context', 'lambda_image', 'weight_decay', 'noise_rate_hz',
                'refractory_us'):
        return validate_non_negative(key, value)

    if name in ('contrast_threshold', 'student_temp', 'teacher_temp', 'lr', 'log_eps',
                'duration_us'):
        return validate_positive(key, value)

    if name in ('center_rate', 'momentum_start', 'momentum_end', 'warmup_fraction',
                'blur_probability', 'jitter_probability', 'holdout_fraction'):
        return validate_probability(value)

    if name in ('batch_size', 'num_contexts', 'kmeans_iters', 'kmeans_restarts', 'iterations',
                'num_bins', 'depth', 'num_heads', 'embed_dim', 'out_dim'):
        return isinstance(value, int) and value >= 1

    if name in ('steps', 'checkpoint_every', 'max_retries', 'threads'):
        return isinstance(value, int) and not isinstance(value, bool) and value >= 0

    if name.endswith('_range'):
        return validate_range(value)

    return True
