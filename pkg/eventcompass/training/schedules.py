"""
학습률 / EMA momentum 스케줄
"""

import math


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    return int(math.floor(warmup_fraction * total_steps + 0.5))


def learning_rate_at(step: int, total_steps: int, base_lr: float, min_lr: float = 0.0,
                     warmup_fraction: float = 0.1) -> float:
    """선형 warmup 후 cosine 감소"""
    if total_steps <= 0:
        return base_lr
    warmup = warmup_steps(total_steps, warmup_fraction)
    if step < warmup:
        return base_lr * (step + 1) / warmup
    progress = min(1.0, (step - warmup) / max(1, total_steps - warmup))
    return min_lr + (base_lr - min_lr) * 0.5 * (1.0 + math.cos(math.pi * progress))


def momentum_at(step: int, total_steps: int, start: float = 0.996, end: float = 1.0) -> float:
    """start → end cosine 증가"""
    if total_steps <= 0:
        return start
    progress = min(1.0, step / total_steps)
    return end - (end - start) * (math.cos(math.pi * progress) + 1.0) / 2.0
