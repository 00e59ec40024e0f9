"""
이벤트 → 복셀 그리드 / 이벤트 이미지 변환
"""

from typing import Tuple

import numpy as np

from .exceptions import DataError
from .models import EventImage, EventStream, VoxelGrid


def normalized_times(stream: EventStream, bins: int) -> np.ndarray:
    """t* = (B−1)(t − t₀)/(t_N − t₀), 시간 폭이 0 이면 모두 0"""
    t = stream.t.astype(np.int64)
    span = int(t[-1] - t[0])
    if span == 0 or bins == 1:
        return np.zeros(len(t), dtype=np.float64)
    return (bins - 1) * (t - t[0]).astype(np.float64) / float(span)


def bilinear_time_weights(t_star: np.ndarray, bins: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """이벤트별 (왼쪽 bin, 왼쪽 가중치, 오른쪽 가중치)

    가중치는 max(0, 1 − |b − t*|) 이고 두 값의 합은 정확히 1.
    """
    left = np.floor(t_star).astype(np.int64)
    left = np.clip(left, 0, bins - 1)
    right_weight = t_star - left
    left_weight = 1.0 - right_weight
    return left, left_weight, right_weight


def voxelize(stream: EventStream, bins: int = 5) -> VoxelGrid:
    """시간 bilinear 복셀 그리드"""
    if bins < 1:
        raise ValueError(f"bin 수는 1 이상이어야 합니다: {bins}")
    if len(stream) == 0:
        raise DataError("빈 이벤트 스트림은 복셀화할 수 없습니다")

    grid = np.zeros((bins, stream.height, stream.width), dtype=np.float64)
    xs = stream.x.astype(np.int64)
    ys = stream.y.astype(np.int64)
    ps = stream.p.astype(np.float64)

    left, left_weight, right_weight = bilinear_time_weights(normalized_times(stream, bins), bins)
    np.add.at(grid, (left, ys, xs), ps * left_weight)

    # t* = B−1 인 이벤트는 오른쪽 가중치가 0
    has_right = (left + 1 < bins) & (right_weight > 0)
    np.add.at(grid, (left[has_right] + 1, ys[has_right], xs[has_right]), ps[has_right] * right_weight[has_right])
    return VoxelGrid(grid)


def to_event_image(grid: VoxelGrid) -> EventImage:
    """0 이 아닌 셀만 표준화 (평균 0, 표준편차 1), 0 셀은 유지"""
    values = np.array(grid.values, dtype=np.float64)
    support = values != 0
    if not support.any():
        return EventImage(values)

    nonzero = values[support]
    std = nonzero.std()
    if std > 0:
        values[support] = (nonzero - nonzero.mean()) / std
    else:
        # 값이 모두 같으면 부호만 남긴다
        values[support] = np.sign(nonzero)
    return EventImage(values)


def polarity_count_image(stream: EventStream) -> EventImage:
    """2채널 (양 / 음 이벤트 수) 이미지"""
    counts = np.zeros((2, stream.height, stream.width), dtype=np.float64)
    if len(stream):
        ys = stream.y.astype(np.int64)
        xs = stream.x.astype(np.int64)
        channel = (stream.p < 0).astype(np.int64)
        np.add.at(counts, (channel, ys, xs), 1.0)
    return EventImage(counts, kind="polarity_count")


def stream_to_event_image(stream: EventStream, bins: int = 5) -> EventImage:
    """스트림 → 정규화된 이벤트 이미지 (빈 스트림은 0 이미지)"""
    if len(stream) == 0:
        return EventImage(np.zeros((bins, stream.height, stream.width)))
    return to_event_image(voxelize(stream, bins))
