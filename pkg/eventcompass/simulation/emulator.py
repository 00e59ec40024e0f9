"""
대비 임계값(contrast threshold) 이벤트 에뮬레이터

픽셀별 log(I+ε) 를 프레임 사이에서 선형 보간하고, 마지막 이벤트 이후의
기준 레벨에서 C 의 배수를 넘을 때마다 이벤트를 낸다.
"""

from typing import Sequence, Tuple

import numpy as np

from ..config.settings import SimConfig
from ..core.exceptions import DataError
from ..core.models import EventStream
from ..utils.logger import get_logger
from ..utils.seeding import make_rng

logger = get_logger(__name__)

# floor(|Δ|/C) 의 부동소수 오차 허용치
CROSSING_TOL = 1e-9


def log_intensity(frame: np.ndarray, eps: float) -> np.ndarray:
    """log(I + ε)"""
    frame = np.asarray(frame, dtype=np.float64)
    if np.any(frame < 0) or not np.all(np.isfinite(frame)):
        raise DataError("프레임 밝기는 0 이상의 유한값이어야 합니다")
    return np.log(frame + eps)


def interval_crossings(l0: np.ndarray, l1: np.ndarray, reference: np.ndarray,
                       threshold: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """한 프레임 구간의 임계값 교차

    Returns:
        (픽셀 인덱스, polarity, 구간 내 비율 [0, 1], 갱신된 기준 레벨)
    """
    diff = l1 - reference
    polarity = np.sign(diff).astype(np.int8)
    counts = np.floor(np.abs(diff) / threshold + CROSSING_TOL).astype(np.int64)
    counts[polarity == 0] = 0

    pixels = np.repeat(np.arange(diff.size), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    k = np.arange(pixels.size) - starts + 1

    pol = polarity[pixels]
    levels = reference[pixels] + pol * k * threshold
    delta = l1[pixels] - l0[pixels]
    fraction = np.divide(levels - l0[pixels], delta, out=np.ones_like(levels), where=delta != 0)
    fraction = np.clip(fraction, 0.0, 1.0)

    new_reference = reference + polarity * counts * threshold
    return pixels, pol, fraction, new_reference


def refractory_mask(t: np.ndarray, pixels: np.ndarray, refractory_us: int) -> np.ndarray:
    """같은 픽셀에서 직전 유지 이벤트와 refractory_us 미만 간격인 이벤트 제거"""
    keep = np.ones(t.size, dtype=bool)
    if refractory_us <= 0 or t.size == 0:
        return keep

    order = np.lexsort((t, pixels))
    last_pixel, last_time = -1, 0
    for idx in order:
        if pixels[idx] == last_pixel and t[idx] - last_time < refractory_us:
            keep[idx] = False
            continue
        last_pixel, last_time = pixels[idx], t[idx]
    return keep


def poisson_noise(rng: np.random.Generator, num_pixels: int, t_start: int, t_end: int,
                  rate_hz: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """픽셀별 균일 Poisson 잡음 이벤트 (시간, 픽셀, polarity)"""
    span_s = (t_end - t_start) * 1e-6
    counts = rng.poisson(rate_hz * span_s, size=num_pixels)
    total = int(counts.sum())
    pixels = np.repeat(np.arange(num_pixels), counts)
    times = rng.integers(t_start, t_end + 1, size=total, dtype=np.int64)
    polarity = rng.choice(np.array([-1, 1], dtype=np.int8), size=total)
    return times, pixels, polarity


def simulate_from_frames(frames: Sequence[np.ndarray], timestamps: Sequence[int],
                         config: SimConfig) -> EventStream:
    """그레이스케일 프레임 시퀀스 → 이벤트 스트림"""
    if len(frames) < 2:
        raise DataError(f"프레임이 2장 이상 필요합니다: {len(frames)}")
    if len(timestamps) != len(frames):
        raise DataError("프레임과 타임스탬프 개수가 다릅니다")

    shape = np.shape(frames[0])
    if len(shape) != 2:
        raise DataError(f"그레이스케일 2차원 프레임이 필요합니다: {shape}")
    for frame in frames[1:]:
        if np.shape(frame) != shape:
            raise DataError(f"프레임 크기 불일치: {np.shape(frame)} vs {shape}")

    timestamps = np.asarray(timestamps, dtype=np.int64)
    if np.any(timestamps < 0) or np.any(np.diff(timestamps) <= 0):
        raise DataError("타임스탬프는 0 이상이고 순증가해야 합니다")

    height, width = shape
    threshold = config.contrast_threshold

    previous = log_intensity(frames[0], config.log_eps).ravel()
    reference = previous.copy()
    all_t, all_pixels, all_pol = [], [], []

    for index in range(1, len(frames)):
        current = log_intensity(frames[index], config.log_eps).ravel()
        t0, t1 = int(timestamps[index - 1]), int(timestamps[index])
        pixels, pol, fraction, reference = interval_crossings(previous, current, reference, threshold)
        all_t.append(t0 + np.rint(fraction * (t1 - t0)).astype(np.int64))
        all_pixels.append(pixels)
        all_pol.append(pol)
        previous = current

    t = np.concatenate(all_t)
    pixels = np.concatenate(all_pixels)
    polarity = np.concatenate(all_pol)

    keep = refractory_mask(t, pixels, config.refractory_us)
    t, pixels, polarity = t[keep], pixels[keep], polarity[keep]

    if config.noise_rate_hz > 0:
        rng = make_rng(config.seed)
        noise_t, noise_pixels, noise_pol = poisson_noise(
            rng, height * width, int(timestamps[0]), int(timestamps[-1]), config.noise_rate_hz)
        t = np.concatenate([t, noise_t])
        pixels = np.concatenate([pixels, noise_pixels])
        polarity = np.concatenate([polarity, noise_pol])

    ys, xs = np.divmod(pixels, width)
    order = np.lexsort((polarity, xs, ys, t))
    stream = EventStream(width, height, t[order], xs[order], ys[order], polarity[order])
    logger.debug(f"시뮬레이션 완료: {len(stream)}개 이벤트 ({len(frames)} 프레임, {width}x{height})")
    return stream
