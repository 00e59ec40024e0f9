"""
파라미터 업데이트 (AdamW / SGD)
"""

from typing import Dict, Optional, Tuple

import numpy as np

from .tensor import GradientTable, Tensor


class AdamW:
    """decoupled weight decay Adam

    1차원 파라미터(bias, LayerNorm, mask token)에는 weight decay 를 적용하지 않는다.
    """

    def __init__(self, params: Dict[str, Tensor], lr: float = 1e-3,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.exp_avg = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.exp_avg_sq = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self, grads: GradientTable, lr: Optional[float] = None):
        """그래디언트 테이블로 한 스텝 업데이트"""
        lr = self.lr if lr is None else lr
        beta1, beta2 = self.betas
        self.step_count += 1
        bias1 = 1.0 - beta1 ** self.step_count
        bias2 = 1.0 - beta2 ** self.step_count

        for name, param in self.params.items():
            grad = grads[param]
            m = self.exp_avg[name]
            v = self.exp_avg_sq[name]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad

            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            if self.weight_decay > 0 and param.data.ndim >= 2:
                update = update + self.weight_decay * param.data
            param.data -= (lr * update).astype(param.dtype, copy=False)

    def state_dict(self) -> Dict[str, np.ndarray]:
        """체크포인트용 모멘트"""
        state = {}
        for name in self.params:
            state[f"exp_avg/{name}"] = self.exp_avg[name]
            state[f"exp_avg_sq/{name}"] = self.exp_avg_sq[name]
        state["step_count"] = np.asarray([self.step_count], dtype=np.int64)
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        for name in self.params:
            self.exp_avg[name] = np.array(state[f"exp_avg/{name}"], dtype=self.params[name].dtype)
            self.exp_avg_sq[name] = np.array(state[f"exp_avg_sq/{name}"], dtype=self.params[name].dtype)
        self.step_count = int(state["step_count"][0])


class SGD:
    """경사하강법 (선형 프로브용)"""

    def __init__(self, params: Dict[str, Tensor], lr: float = 0.1):
        self.params = params
        self.lr = lr

    def step(self, grads: GradientTable, lr: Optional[float] = None):
        lr = self.lr if lr is None else lr
        for param in self.params.values():
            param.data -= (lr * grads[param]).astype(param.dtype, copy=False)
