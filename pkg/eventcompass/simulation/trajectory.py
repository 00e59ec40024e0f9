"""
카메라 궤적 생성 (square / vertical / horizontal / random-affine)
"""

from typing import List, Tuple

import numpy as np

from ..core.exceptions import ConfigError
from ..core.geometry import AffineTransform2D, about_center
from .models import CameraTrajectory, TrajectoryPattern

MAX_ROTATION_DEG = 15.0
SCALE_RANGE = (0.9, 1.1)


def _square_path(num_poses: int, amplitude: float) -> np.ndarray:
    """(−a,−a) → (a,−a) → (a,a) → (−a,a) → (−a,−a) 둘레"""
    corners = amplitude * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1], [-1, -1]], dtype=np.float64)
    s = 4.0 * np.arange(num_poses) / (num_poses - 1)
    side = np.minimum(np.floor(s).astype(np.int64), 3)
    u = (s - side)[:, None]
    return corners[side] * (1.0 - u) + corners[side + 1] * u


def _linear_sweep(num_poses: int, amplitude: float) -> np.ndarray:
    return np.linspace(-amplitude, amplitude, num_poses)


def _rotation_scale(angle_rad: float, scale: float) -> np.ndarray:
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return scale * np.array([[c, -s], [s, c]])


def _random_affine_poses(rng: np.random.Generator, num_poses: int, amplitude: float,
                         size: Tuple[int, int]) -> List[AffineTransform2D]:
    """항등 포즈에서 무작위 끝 포즈까지 선형 보간"""
    angle = np.deg2rad(rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG))
    scale = rng.uniform(*SCALE_RANGE)
    translation = rng.uniform(-amplitude, amplitude, size=2)

    poses = []
    for u in np.linspace(0.0, 1.0, num_poses):
        linear = _rotation_scale(u * angle, 1.0 + u * (scale - 1.0))
        poses.append(about_center(linear, u * translation, size))
    return poses


def generate_trajectory(pattern: str, duration: int, amplitude: float, num_poses: int,
                        seed: int = 0, size: Tuple[int, int] = (64, 64)) -> CameraTrajectory:
    """궤적 생성 (시드 고정 시 결정적)

    포즈는 프레임 픽셀 좌표를 원본 이미지 좌표로 보낸다. size 는 (H, W)
    이며 random-affine 회전/스케일의 중심을 정한다.
    """
    try:
        kind = TrajectoryPattern(pattern)
    except ValueError:
        raise ConfigError(f"알 수 없는 궤적 패턴: {pattern!r}", key="dataset.trajectory_pattern") from None
    if duration <= 0:
        raise ValueError(f"duration 은 양수여야 합니다: {duration}")
    if num_poses < 2:
        raise ValueError(f"num_poses 는 2 이상이어야 합니다: {num_poses}")
    if duration < num_poses - 1:
        raise ValueError("duration 이 너무 짧아 타임스탬프가 순증가하지 않습니다")

    timestamps = np.rint(np.linspace(0, duration, num_poses)).astype(np.int64)

    if kind is TrajectoryPattern.RANDOM_AFFINE:
        rng = np.random.default_rng(seed)
        poses = _random_affine_poses(rng, num_poses, amplitude, size)
    else:
        if kind is TrajectoryPattern.SQUARE:
            offsets = _square_path(num_poses, amplitude)
        elif kind is TrajectoryPattern.VERTICAL:
            offsets = np.stack([np.zeros(num_poses), _linear_sweep(num_poses, amplitude)], axis=1)
        else:
            offsets = np.stack([_linear_sweep(num_poses, amplitude), np.zeros(num_poses)], axis=1)
        poses = [AffineTransform2D.translation(dx, dy) for dx, dy in offsets]

    return CameraTrajectory(timestamps, poses, kind)
