"""
투영 헤드 (3층 MLP + weight-normalized 프로토타입 층)
"""

import numpy as np

from ..engine import functional as F
from ..engine.tensor import Tensor
from .layers import Linear, Module, trunc_normal


class ProjectionHead(Module):
    """D → D_h → D_h → d_bottleneck (GELU), L2 정규화, 프로토타입 d 개"""

    def __init__(self, in_dim: int, hidden_dim: int, bottleneck_dim: int, out_dim: int,
                 rng: np.random.Generator):
        super().__init__()
        self.out_dim = out_dim
        self.fc1 = self.add_module('fc1', Linear(in_dim, hidden_dim, rng))
        self.fc2 = self.add_module('fc2', Linear(hidden_dim, hidden_dim, rng))
        self.fc3 = self.add_module('fc3', Linear(hidden_dim, bottleneck_dim, rng))
        # 프로토타입 방향 (열 단위로 정규화해서 사용)
        self.prototypes = self.register_parameter('prototypes', trunc_normal(rng, (bottleneck_dim, out_dim)))

    def forward(self, x: Tensor) -> Tensor:
        """(rows, D) → (rows, d) 프로토타입 로짓"""
        h = F.gelu(self.fc1(x))
        h = F.gelu(self.fc2(h))
        h = F.l2_normalize(self.fc3(h), axis=-1)
        weight = F.l2_normalize(self.prototypes, axis=0)
        return F.matmul(h, weight)
