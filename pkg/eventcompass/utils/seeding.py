"""
시드 유틸리티

샘플별 시드는 (global_seed, index) 쌍에서 SeedSequence로 유도한다.
"""

from typing import Sequence

import numpy as np


def derive_seed(global_seed: int, *keys: int) -> int:
    """(global_seed, keys...) → 32비트 정수 시드"""
    sequence = np.random.SeedSequence([int(global_seed), *map(int, keys)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def make_rng(global_seed: int, *keys: int) -> np.random.Generator:
    """파생 시드로 Generator 생성"""
    return np.random.default_rng(np.random.SeedSequence([int(global_seed), *map(int, keys)]))


def draw_seeds(rng: np.random.Generator, count: int) -> Sequence[int]:
    """상위 Generator에서 하위 시드 여러 개 추출"""
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=count)]


def rng_state(rng: np.random.Generator) -> dict:
    """Generator 상태 (JSON 직렬화 가능)"""
    return rng.bit_generator.state


def restore_rng(state: dict) -> np.random.Generator:
    """저장된 상태로 Generator 복원"""
    bit_generator = getattr(np.random, state['bit_generator'])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
