"""
파라미터 모듈 기본 클래스와 기본 레이어
"""

from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from ..core.exceptions import ShapeError
from ..engine import functional as F
from ..engine.tensor import Tensor, as_tensor

INIT_STD = 0.02


def trunc_normal(rng: np.random.Generator, shape, std: float = INIT_STD) -> np.ndarray:
    """±2σ 절단 정규분포 초기화"""
    values = rng.standard_normal(size=shape)
    return np.clip(values, -2.0, 2.0) * std


class Module:
    """이름 있는 파라미터 / 하위 모듈 트리"""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}
        self._children: Dict[str, "Module"] = {}

    def register_parameter(self, name: str, values: np.ndarray) -> Tensor:
        tensor = Tensor(values, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_module(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        """등록 순서대로 (dotted 이름, 파라미터)"""
        for name, tensor in self._params.items():
            yield prefix + name, tensor
        for child_name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{child_name}.")

    def parameters(self) -> Dict[str, Tensor]:
        return dict(self.named_parameters())

    def requires_grad_(self, flag: bool) -> "Module":
        for _, tensor in self.named_parameters():
            tensor.requires_grad = flag
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        if missing:
            raise KeyError(f"누락된 파라미터: {missing[:5]}")
        for name, tensor in params.items():
            values = np.asarray(state[name])
            if values.shape != tensor.shape:
                raise ShapeError(f"{name}: 모양 불일치 {values.shape} vs {tensor.shape}")
            tensor.data = values.astype(tensor.dtype, copy=True)

    def num_parameters(self) -> int:
        return int(sum(tensor.data.size for _, tensor in self.named_parameters()))

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


class Linear(Module):
    """y = x W + b"""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = self.register_parameter('weight', trunc_normal(rng, (in_dim, out_dim)))
        self.bias: Optional[Tensor] = self.register_parameter('bias', np.zeros(out_dim)) if bias else None

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"Linear: 입력 모양 {x.shape}, 기대 (*, {self.in_dim})")
        out = F.matmul(x, self.weight)
        if self.bias is not None:
            out = F.add(out, self.bias)
        return out


class LayerNorm(Module):
    """마지막 축 LayerNorm"""

    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gamma = self.register_parameter('gamma', np.ones(dim))
        self.beta = self.register_parameter('beta', np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        return F.layernorm(x, self.gamma, self.beta, self.eps)
