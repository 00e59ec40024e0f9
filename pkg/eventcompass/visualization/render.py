"""
이벤트 이미지 / 컨텍스트 라벨 렌더링

양(+) 이벤트는 빨강, 음(−) 이벤트는 파랑, 이벤트 없음은 흰색
"""

import os
from typing import Optional, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..analysis.context_miner import ContextAssignment, mine_contexts  # noqa: E402
from ..augmentation.patches import PatchGrid  # noqa: E402
from ..core.exceptions import ShapeError  # noqa: E402
from ..core.models import EventImage, EventStream, VoxelGrid  # noqa: E402
from ..core.representation import polarity_count_image  # noqa: E402
from ..network.vit import ViTBackbone  # noqa: E402
from ..utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

POSITIVE = np.array([255, 0, 0], dtype=np.uint8)
NEGATIVE = np.array([0, 0, 255], dtype=np.uint8)
BACKGROUND = np.array([255, 255, 255], dtype=np.uint8)
INVALID_COLOR = np.array([64, 64, 64], dtype=np.uint8)


def polarity_map(source: Union[EventStream, VoxelGrid, EventImage]) -> np.ndarray:
    """픽셀별 극성 합 (H, W)"""
    if isinstance(source, EventStream):
        source = polarity_count_image(source)
    if isinstance(source, VoxelGrid):
        return np.asarray(source.values).sum(axis=0)
    if isinstance(source, EventImage):
        if source.kind == "polarity_count":
            return source.values[0] - source.values[1]
        return source.values.sum(axis=0)
    raise TypeError(f"렌더링할 수 없는 타입: {type(source).__name__}")


def render_rgb(source: Union[EventStream, VoxelGrid, EventImage]) -> np.ndarray:
    """(H, W, 3) uint8 래스터"""
    polarity = polarity_map(source)
    rgb = np.empty(polarity.shape + (3,), dtype=np.uint8)
    rgb[...] = BACKGROUND
    rgb[polarity > 0] = POSITIVE
    rgb[polarity < 0] = NEGATIVE
    return rgb


def context_colors(num_contexts: int) -> np.ndarray:
    """tab10 팔레트 (K 개, uint8)"""
    cmap = plt.get_cmap('tab10')
    return np.array([np.round(np.array(cmap(k % 10)[:3]) * 255) for k in range(num_contexts)], dtype=np.uint8)


def context_label_map(assignment: ContextAssignment, grid: PatchGrid) -> np.ndarray:
    """패치별 컨텍스트 번호 → (H, W) 라벨, 무효 패치는 -1"""
    if assignment.num_patches != grid.num_patches:
        raise ShapeError(f"할당 길이 {assignment.num_patches} ≠ 패치 수 {grid.num_patches}")
    return grid.label_grid(assignment.labels)


def render_labels(label_map: np.ndarray, num_contexts: int) -> np.ndarray:
    """라벨 맵 → 컨텍스트 색 (H, W, 3)"""
    colors = context_colors(num_contexts)
    rgb = np.empty(label_map.shape + (3,), dtype=np.uint8)
    rgb[...] = INVALID_COLOR
    valid = label_map >= 0
    rgb[valid] = colors[label_map[valid]]
    return rgb


def blend(base: np.ndarray, overlay: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    if base.shape != overlay.shape:
        raise ShapeError(f"blend: 모양 불일치 {base.shape} vs {overlay.shape}")
    mixed = (1.0 - alpha) * base.astype(np.float64) + alpha * overlay.astype(np.float64)
    return np.clip(np.round(mixed), 0, 255).astype(np.uint8)


def mine_image_contexts(backbone: ViTBackbone, image: EventImage, grid: PatchGrid, num_contexts: int,
                        iters: int, seed: int) -> ContextAssignment:
    """한 이미지의 teacher 특징 컨텍스트"""
    features = backbone.encode(grid.patchify(image.values))
    _, assignment = mine_contexts(features, num_contexts, iters, np.random.default_rng(seed))
    return assignment


def save_png(path: str, rgb: np.ndarray, scale: int = 1) -> str:
    """uint8 RGB 저장 (scale 배 최근접 확대)"""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"save_png: (H, W, 3) 이 필요합니다: {rgb.shape}")
    if scale > 1:
        rgb = rgb.repeat(scale, axis=0).repeat(scale, axis=1)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    plt.imsave(path, rgb)
    return path


def render_sample(out_dir: str, sample_id: str, stream: EventStream, scale: int = 4,
                  contexts: Optional[Tuple[ContextAssignment, PatchGrid]] = None) -> list:
    """이벤트 이미지 (+ 컨텍스트 라벨 / 블렌드) PNG 저장"""
    event_rgb = render_rgb(stream)
    paths = [save_png(os.path.join(out_dir, f"{sample_id}_events.png"), event_rgb, scale)]
    if contexts is not None:
        assignment, grid = contexts
        labels_rgb = render_labels(context_label_map(assignment, grid), assignment.num_contexts)
        paths.append(save_png(os.path.join(out_dir, f"{sample_id}_contexts.png"), labels_rgb, scale))
        paths.append(save_png(os.path.join(out_dir, f"{sample_id}_blend.png"), blend(event_rgb, labels_rgb), scale))
    logger.debug(f"렌더링: {sample_id} → {len(paths)}개 파일")
    return paths
