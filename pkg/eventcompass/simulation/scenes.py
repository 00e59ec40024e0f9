"""
시뮬레이션 입력 장면

- moving shapes: 텍스처 배경 + 직선 운동하는 강체 도형 (해석적 전경 마스크)
- image source: 정지 PNG 이미지를 카메라 궤적으로 이동
"""

import os
from dataclasses import dataclass
from typing import List, Tuple

import matplotlib.image as mpimg
import numpy as np
from scipy import ndimage

from ..config.settings import DatasetConfig
from ..core.exceptions import DataError
from ..core.geometry import AffineTransform2D, warp_image
from ..utils.logger import get_logger
from .models import CameraTrajectory, SceneFrames, ShapeKind, ShapeSpec
from .trajectory import generate_trajectory

logger = get_logger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
BACKGROUND_RANGE = (0.15, 0.45)


def load_grayscale(path: str) -> np.ndarray:
    """PNG → [0, 1] 그레이스케일 (RGB 는 luma 가중치)"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"이미지를 찾을 수 없습니다: {path}")
    raw = np.asarray(mpimg.imread(path))
    image = raw.astype(np.float64)
    if raw.dtype.kind in "ui":
        image = image / float(np.iinfo(raw.dtype).max)
    if image.ndim == 3:
        image = image[..., :3] @ LUMA_WEIGHTS
    if image.ndim != 2:
        raise DataError(f"지원하지 않는 이미지 모양: {image.shape}")
    return image


def fit_to_size(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """bilinear 리사이즈"""
    height, width = size
    if image.shape == (height, width):
        return image
    zoomed = ndimage.zoom(image, (height / image.shape[0], width / image.shape[1]), order=1)
    return zoomed[:height, :width]


def render_trajectory(image: np.ndarray, trajectory: CameraTrajectory) -> List[np.ndarray]:
    """포즈마다 bilinear 샘플링 + 0 패딩으로 프레임 렌더링"""
    return [np.clip(warp_image(image, pose), 0.0, None) for pose in trajectory.poses]


def smooth_background(rng: np.random.Generator, size: Tuple[int, int], sigma: float = 3.0) -> np.ndarray:
    """저주파 텍스처 배경"""
    noise = ndimage.gaussian_filter(rng.random(size), sigma=sigma, mode='reflect')
    low, high = noise.min(), noise.max()
    scaled = (noise - low) / (high - low) if high > low else np.zeros_like(noise)
    return BACKGROUND_RANGE[0] + scaled * (BACKGROUND_RANGE[1] - BACKGROUND_RANGE[0])


@dataclass
class MovingShapesScene:
    """배경은 카메라 궤적으로, 도형은 각자의 속도로 움직이는 장면"""
    background: np.ndarray  # 여백 포함 (H + 2·margin, W + 2·margin)
    margin: int
    shapes: List[ShapeSpec]
    trajectory: CameraTrajectory
    width: int
    height: int

    def _grid(self) -> Tuple[np.ndarray, np.ndarray]:
        ys, xs = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return xs, ys

    def footprint(self, t_us: float) -> np.ndarray:
        """시각 t 의 전경 영역"""
        xs, ys = self._grid()
        mask = np.zeros((self.height, self.width), dtype=bool)
        for shape in self.shapes:
            mask |= shape.footprint(xs, ys, t_us)
        return mask

    def render(self, index: int) -> np.ndarray:
        """index 번째 포즈 / 시각의 프레임"""
        pose = self.trajectory.poses[index]
        t_us = float(self.trajectory.timestamps[index] - self.trajectory.timestamps[0])
        shift = AffineTransform2D.translation(self.margin, self.margin)
        unshift = AffineTransform2D.translation(-self.margin, -self.margin)
        padded = warp_image(self.background, shift.compose(pose).compose(unshift))
        frame = padded[self.margin:self.margin + self.height, self.margin:self.margin + self.width]

        xs, ys = self._grid()
        for shape in self.shapes:
            mask = shape.footprint(xs, ys, t_us)
            frame[mask] = shape.texture(xs, ys, t_us)[mask]
        return np.clip(frame, 0.0, 1.0)

    def label_map(self) -> np.ndarray:
        """구간 중간 시각의 전경(1) / 배경(0) 라벨"""
        return self.footprint(self.trajectory.duration / 2.0).astype(np.uint8)

    def to_frames(self) -> SceneFrames:
        frames = [self.render(i) for i in range(len(self.trajectory))]
        return SceneFrames(
            frames=frames,
            timestamps=self.trajectory.timestamps.tolist(),
            source="moving-shapes",
            label_map=self.label_map(),
            metadata={'shapes': [shape.to_dict() for shape in self.shapes]},
        )


def random_shape(rng: np.random.Generator, width: int, height: int, duration: int) -> ShapeSpec:
    """무작위 도형 (크기, 위치, 속도, 줄무늬)"""
    side = min(width, height)
    kind = ShapeKind.DISC if rng.random() < 0.5 else ShapeKind.BOX
    if kind is ShapeKind.DISC:
        radius = rng.uniform(0.08, 0.16) * side
        size = (radius, radius)
    else:
        size = tuple(rng.uniform(0.07, 0.15, size=2) * side)

    center = (rng.uniform(0.25, 0.75) * width, rng.uniform(0.25, 0.75) * height)
    speed = rng.uniform(0.1, 0.25) * side / duration
    heading = rng.uniform(0.0, 2.0 * np.pi)
    return ShapeSpec(
        kind=kind,
        center=center,
        size=size,
        velocity=(speed * np.cos(heading), speed * np.sin(heading)),
        stripe_period=rng.uniform(3.0, 6.0),
        stripe_angle=rng.uniform(0.0, np.pi),
        brightness=rng.uniform(0.6, 0.8),
    )


def random_moving_shapes(rng: np.random.Generator, config: DatasetConfig) -> MovingShapesScene:
    """DatasetConfig 로 moving-shapes 장면 생성"""
    size = (config.height, config.width)
    margin = int(np.ceil(2.0 * config.trajectory_amplitude + 0.15 * max(size))) + 2
    background = smooth_background(rng, (config.height + 2 * margin, config.width + 2 * margin))
    trajectory = generate_trajectory(
        config.trajectory_pattern, config.duration_us, config.trajectory_amplitude,
        config.num_frames, seed=int(rng.integers(0, 2**31 - 1)), size=size)
    count = int(rng.integers(1, config.max_shapes + 1))
    shapes = [random_shape(rng, config.width, config.height, config.duration_us) for _ in range(count)]
    return MovingShapesScene(background, margin, shapes, trajectory, config.width, config.height)


class MovingShapesSource:
    """moving-shapes 절차적 소스"""
    tag = "moving-shapes"

    def generate(self, rng: np.random.Generator, config: DatasetConfig) -> SceneFrames:
        return random_moving_shapes(rng, config).to_frames()


class ImageSource:
    """정지 이미지 + 카메라 궤적 소스"""

    def __init__(self, path: str):
        self.path = path
        self.tag = f"image:{os.path.basename(path)}"

    def generate(self, rng: np.random.Generator, config: DatasetConfig) -> SceneFrames:
        size = (config.height, config.width)
        image = fit_to_size(load_grayscale(self.path), size)
        trajectory = generate_trajectory(
            config.trajectory_pattern, config.duration_us, config.trajectory_amplitude,
            config.num_frames, seed=int(rng.integers(0, 2**31 - 1)), size=size)
        return SceneFrames(
            frames=render_trajectory(image, trajectory),
            timestamps=trajectory.timestamps.tolist(),
            source=self.tag,
            metadata={'trajectory': trajectory.pattern.value},
        )


def build_sources(config: DatasetConfig) -> list:
    """설정에 따른 소스 목록 (image_dir 가 있으면 이미지 폴더)"""
    if not config.image_dir:
        return [MovingShapesSource() for _ in range(config.num_samples)]

    if not os.path.isdir(config.image_dir):
        raise DataError(f"이미지 폴더를 찾을 수 없습니다: {config.image_dir}")
    paths = sorted(
        os.path.join(config.image_dir, name) for name in os.listdir(config.image_dir)
        if name.lower().endswith('.png')
    )
    if not paths:
        raise DataError(f"PNG 이미지가 없습니다: {config.image_dir}")
    logger.info(f"이미지 소스 {len(paths)}개 발견: {config.image_dir}")
    return [ImageSource(paths[i % len(paths)]) for i in range(config.num_samples)]
