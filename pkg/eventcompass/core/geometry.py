"""
2D 아핀 변환과 이미지 워핑

좌표는 (x, y) = (열, 행) 픽셀 중심 기준이다.
AffineTransform2D 는 출력 이미지 좌표를 원본 이미지 좌표로 보낸다.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from .exceptions import NumericError

DET_EPS = 1e-6


@dataclass(frozen=True)
class AffineTransform2D:
    """2×3 행렬 [A|b], p_src = A·p + b"""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64).reshape(2, 3)
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def identity(cls) -> "AffineTransform2D":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    @classmethod
    def translation(cls, dx: float, dy: float) -> "AffineTransform2D":
        return cls(np.array([[1.0, 0.0, dx], [0.0, 1.0, dy]]))

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:, :2]

    @property
    def offset(self) -> np.ndarray:
        return self.matrix[:, 2]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, AffineTransform2D.identity().matrix))

    def check_invertible(self):
        if abs(self.det) <= DET_EPS:
            raise NumericError(f"퇴화된 아핀 변환입니다: |det A| = {abs(self.det):.3e}")

    def apply(self, points: np.ndarray) -> np.ndarray:
        """(…, 2) 점 배열 변환"""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.linear.T + self.offset

    def inverse(self) -> "AffineTransform2D":
        self.check_invertible()
        inv_linear = np.linalg.inv(self.linear)
        return AffineTransform2D(np.hstack([inv_linear, (-inv_linear @ self.offset)[:, None]]))

    def compose(self, other: "AffineTransform2D") -> "AffineTransform2D":
        """self ∘ other (other 를 먼저 적용)"""
        linear = self.linear @ other.linear
        offset = self.linear @ other.offset + self.offset
        return AffineTransform2D(np.hstack([linear, offset[:, None]]))

    def to_list(self):
        return self.matrix.tolist()


def about_center(linear: np.ndarray, translation: Tuple[float, float],
                 size: Tuple[int, int]) -> AffineTransform2D:
    """이미지 중심 기준 선형 변환 + 평행이동"""
    height, width = size
    center = np.array([(width - 1) / 2.0, (height - 1) / 2.0])
    offset = center - linear @ center + np.asarray(translation, dtype=np.float64)
    return AffineTransform2D(np.hstack([linear, offset[:, None]]))


def warp_image(image: np.ndarray, transform: AffineTransform2D, order: int = 1,
               cval: float = 0.0) -> np.ndarray:
    """out(p) = image(T p), bilinear 보간 + 바깥은 cval

    image 는 (H, W) 또는 (C, H, W). 항등 변환은 입력을 그대로 복사한다.
    """
    image = np.asarray(image, dtype=np.float64)
    if transform.is_identity():
        return image.copy()

    height, width = image.shape[-2:]
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    pts = transform.apply(np.stack([xs, ys], axis=-1))
    coords = np.stack([pts[..., 1], pts[..., 0]])  # (row, col)

    if image.ndim == 2:
        return ndimage.map_coordinates(image, coords, order=order, mode='constant', cval=cval)
    return np.stack([
        ndimage.map_coordinates(channel, coords, order=order, mode='constant', cval=cval)
        for channel in image
    ])
