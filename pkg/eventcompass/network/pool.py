"""
어텐션 풀링 (학습된 query 하나가 특징 집합을 요약)
"""

import numpy as np

from ..core.exceptions import ShapeError
from ..engine import functional as F
from ..engine.tensor import Tensor, as_tensor
from .layers import Linear, Module, trunc_normal


class AttentionPool(Module):
    """softmax(q·Kᵀ/√D)·V 후 출력 투영, 위치 정보가 없어 순서에 불변"""

    def __init__(self, dim: int, rng: np.random.Generator):
        super().__init__()
        self.dim = dim
        self.query = self.register_parameter('query', trunc_normal(rng, (1, dim)))
        self.key = self.add_module('key', Linear(dim, dim, rng))
        self.value = self.add_module('value', Linear(dim, dim, rng))
        self.out = self.add_module('out', Linear(dim, dim, rng))

    def forward(self, features) -> Tensor:
        """(M, D) 특징 집합 → (1, D) 임베딩"""
        features = as_tensor(features)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ShapeError(f"attention_pool: 비어 있지 않은 (M, D) 입력이 필요합니다: {features.shape}")

        keys = self.key(features)
        values = self.value(features)
        scores = F.scale(F.matmul(self.query, F.transpose(keys, (1, 0))), 1.0 / np.sqrt(self.dim))
        weights = F.softmax(scores, axis=-1)
        return self.out(F.matmul(weights, values))


def attention_pool(pool: AttentionPool, features) -> Tensor:
    return pool(features)
