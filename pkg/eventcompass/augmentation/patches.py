"""
패치 격자, 아핀 유도 패치 대응, 패치 마스크
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.exceptions import ShapeError
from ..core.geometry import AffineTransform2D

INVALID = -1


@dataclass(frozen=True)
class PatchGrid:
    """P×P 패치 격자 (행 우선 순서)"""
    patch_size: int
    height: int
    width: int

    def __post_init__(self):
        if self.patch_size <= 0 or self.height % self.patch_size or self.width % self.patch_size:
            raise ShapeError(
                f"패치 크기 {self.patch_size} 가 이미지 {self.height}x{self.width} 를 나누지 않습니다")

    @property
    def rows(self) -> int:
        return self.height // self.patch_size

    @property
    def cols(self) -> int:
        return self.width // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.rows * self.cols

    def patch_dim(self, channels: int) -> int:
        return self.patch_size * self.patch_size * channels

    def centers(self) -> np.ndarray:
        """패치 중심 (N, 2) = (x, y)"""
        p = self.patch_size
        rows, cols = np.divmod(np.arange(self.num_patches), self.cols)
        return np.stack([cols * p + (p - 1) / 2.0, rows * p + (p - 1) / 2.0], axis=1)

    def locate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """점 (…, 2) 이 들어 있는 패치 인덱스와 범위 내 여부"""
        x, y = points[..., 0], points[..., 1]
        inside = (x >= -0.5) & (x < self.width - 0.5) & (y >= -0.5) & (y < self.height - 0.5)
        cols = np.clip(np.floor((x + 0.5) / self.patch_size).astype(np.int64), 0, self.cols - 1)
        rows = np.clip(np.floor((y + 0.5) / self.patch_size).astype(np.int64), 0, self.rows - 1)
        return rows * self.cols + cols, inside

    def patchify(self, values: np.ndarray) -> np.ndarray:
        """(C, H, W) → (N, C·P·P)"""
        values = np.asarray(values)
        if values.ndim != 3 or values.shape[1:] != (self.height, self.width):
            raise ShapeError(f"patchify: 모양 불일치 {values.shape}")
        c, p = values.shape[0], self.patch_size
        blocks = values.reshape(c, self.rows, p, self.cols, p).transpose(1, 3, 0, 2, 4)
        return blocks.reshape(self.num_patches, c * p * p)

    def unpatchify(self, patches: np.ndarray, channels: int) -> np.ndarray:
        """(N, C·P·P) → (C, H, W)"""
        patches = np.asarray(patches)
        p = self.patch_size
        if patches.shape != (self.num_patches, channels * p * p):
            raise ShapeError(f"unpatchify: 모양 불일치 {patches.shape}")
        blocks = patches.reshape(self.rows, self.cols, channels, p, p).transpose(2, 0, 3, 1, 4)
        return blocks.reshape(channels, self.height, self.width)

    def label_grid(self, patch_labels: np.ndarray) -> np.ndarray:
        """패치별 값 → (H, W) 픽셀 맵"""
        grid = np.asarray(patch_labels).reshape(self.rows, self.cols)
        return np.kron(grid, np.ones((self.patch_size, self.patch_size), dtype=grid.dtype))


@dataclass(frozen=True)
class CorrespondenceMap:
    """x★ 패치 i → x⁺ 패치 corr(i) 또는 INVALID"""
    indices: np.ndarray

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64)
        indices.setflags(write=False)
        object.__setattr__(self, 'indices', indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, i: int) -> int:
        return int(self.indices[i])

    @property
    def valid(self) -> np.ndarray:
        return self.indices != INVALID

    @property
    def num_valid(self) -> int:
        return int(self.valid.sum())

    @classmethod
    def identity(cls, num_patches: int) -> "CorrespondenceMap":
        return cls(np.arange(num_patches))


def build_correspondence(transform: AffineTransform2D, grid: PatchGrid,
                         height: Optional[int] = None, width: Optional[int] = None) -> CorrespondenceMap:
    """x★ 패치 중심을 T 로 보내 x⁺ 에서 그 점을 포함하는 패치 선택"""
    transform.check_invertible()
    if (height, width) != (None, None) and (height, width) != (grid.height, grid.width):
        raise ShapeError(f"격자 {grid.height}x{grid.width} 와 이미지 {height}x{width} 불일치")

    mapped = transform.apply(grid.centers())
    indices, inside = grid.locate(mapped)
    return CorrespondenceMap(np.where(inside, indices, INVALID))


@dataclass(frozen=True)
class MaskVector:
    """패치 마스크 m (True = [MASK] 로 교체)"""
    mask: np.ndarray
    ratio: float

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, 'mask', mask)

    def __len__(self) -> int:
        return len(self.mask)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @classmethod
    def none(cls, num_patches: int) -> "MaskVector":
        return cls(np.zeros(num_patches, dtype=bool), 0.0)


def mask_count(num_patches: int, ratio: float) -> int:
    """round(ratio · N), 0.5 는 올림"""
    return int(np.floor(ratio * num_patches + 0.5))


def sample_mask(rng: np.random.Generator, num_patches: int, ratio: Optional[float] = None,
                ratio_range: Tuple[float, float] = (0.1, 0.5)) -> MaskVector:
    """비복원 균등 추출로 round(ratio·N) 개 패치 마스킹"""
    if ratio is None:
        ratio = float(rng.uniform(*ratio_range))
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"마스크 비율은 [0, 1] 이어야 합니다: {ratio}")
    count = mask_count(num_patches, ratio)
    if count < 1:
        raise ValueError(f"마스킹된 패치가 최소 1개 필요합니다 (ratio={ratio}, N={num_patches})")

    mask = np.zeros(num_patches, dtype=bool)
    mask[rng.choice(num_patches, size=count, replace=False)] = True
    return MaskVector(mask, ratio)
