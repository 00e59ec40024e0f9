"""
이벤트 시뮬레이션 데이터 모델
카메라 궤적과 moving-shapes 도형 정의
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..core.exceptions import DataError
from ..core.geometry import AffineTransform2D


class TrajectoryPattern(Enum):
    """궤적 패턴"""
    SQUARE = "square"
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    RANDOM_AFFINE = "random-affine"


class ShapeKind(Enum):
    """도형 종류"""
    DISC = "disc"
    BOX = "box"


@dataclass
class CameraTrajectory:
    """(타임스탬프 µs, 2D 아핀 포즈) 목록"""
    timestamps: np.ndarray
    poses: List[AffineTransform2D]
    pattern: TrajectoryPattern

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if len(self.timestamps) != len(self.poses):
            raise DataError("타임스탬프와 포즈 개수가 다릅니다")
        if len(self.poses) < 2:
            raise DataError("궤적에는 포즈가 2개 이상 필요합니다")
        if np.any(self.timestamps < 0) or np.any(np.diff(self.timestamps) <= 0):
            raise DataError("궤적 타임스탬프는 0 이상이고 순증가해야 합니다")
        for pose in self.poses:
            pose.check_invertible()

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def duration(self) -> int:
        return int(self.timestamps[-1] - self.timestamps[0])

    def translations(self) -> np.ndarray:
        """포즈별 평행이동 (n, 2)"""
        return np.array([pose.offset for pose in self.poses])

    def to_dict(self) -> Dict:
        return {
            'pattern': self.pattern.value,
            'timestamps': self.timestamps.tolist(),
            'poses': [pose.to_list() for pose in self.poses],
        }


@dataclass
class ShapeSpec:
    """직선 운동하는 강체 도형

    center / velocity 는 프레임 픽셀 좌표, velocity 단위는 px/µs.
    size 는 disc 의 반지름 또는 box 의 (반폭, 반높이).
    """
    kind: ShapeKind
    center: Tuple[float, float]
    size: Tuple[float, float]
    velocity: Tuple[float, float]
    stripe_period: float = 4.0
    stripe_angle: float = 0.0
    brightness: float = 0.6
    contrast: float = 0.35

    def center_at(self, t_us: float) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64) + t_us * np.asarray(self.velocity, dtype=np.float64)

    def footprint(self, xs: np.ndarray, ys: np.ndarray, t_us: float) -> np.ndarray:
        """시각 t 의 도형 영역 (픽셀 중심 기준)"""
        cx, cy = self.center_at(t_us)
        if self.kind is ShapeKind.DISC:
            radius = self.size[0]
            return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
        half_w, half_h = self.size
        return (np.abs(xs - cx) <= half_w) & (np.abs(ys - cy) <= half_h)

    def texture(self, xs: np.ndarray, ys: np.ndarray, t_us: float) -> np.ndarray:
        """도형에 붙어 움직이는 줄무늬 밝기"""
        cx, cy = self.center_at(t_us)
        phase = ((xs - cx) * np.cos(self.stripe_angle) + (ys - cy) * np.sin(self.stripe_angle))
        return self.brightness + self.contrast * np.sin(2.0 * np.pi * phase / self.stripe_period)

    def to_dict(self) -> Dict:
        return {
            'kind': self.kind.value,
            'center': list(self.center),
            'size': list(self.size),
            'velocity': list(self.velocity),
            'stripe_period': self.stripe_period,
            'stripe_angle': self.stripe_angle,
        }


@dataclass
class SceneFrames:
    """시뮬레이터 입력 프레임 묶음"""
    frames: List[np.ndarray]
    timestamps: Sequence[int]
    source: str
    label_map: np.ndarray = None
    metadata: Dict = field(default_factory=dict)
