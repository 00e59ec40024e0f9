"""
중앙 차분 그래디언트 검사 (float64)
"""

from typing import Callable, Dict

import numpy as np

from .tensor import Tape, Tensor, backward, precision


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """‖a − n‖ / max(‖a‖ + ‖n‖, floor)"""
    diff = np.linalg.norm((analytic - numeric).ravel())
    scale = np.linalg.norm(analytic.ravel()) + np.linalg.norm(numeric.ravel())
    return float(diff / max(scale, floor))


def numerical_gradient(evaluate: Callable[[], float], array: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """array 를 제자리에서 흔들며 중앙 차분"""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = evaluate()
        flat[i] = original - eps
        minus = evaluate()
        flat[i] = original
        grad_flat[i] = (plus - minus) / (2.0 * eps)
    return grad


def check_gradients(build_loss: Callable[..., Tensor], inputs: Dict[str, np.ndarray],
                    eps: float = 1e-5) -> Dict[str, float]:
    """build_loss(**tensors) 의 해석적 / 수치 그래디언트 상대 오차"""
    with precision(np.float64):
        tensors = {name: Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
                   for name, value in inputs.items()}
        with Tape() as tape:
            loss = build_loss(**tensors)
        grads = backward(loss, tape)

        def evaluate() -> float:
            return float(build_loss(**tensors).data)

        errors = {}
        for name, tensor in tensors.items():
            numeric = numerical_gradient(evaluate, tensor.data, eps)
            errors[name] = relative_error(grads[tensor], numeric)
    return errors


def assert_gradients_close(build_loss, inputs: Dict[str, np.ndarray], rtol: float = 1e-4,
                           eps: float = 1e-5):
    """모든 입력의 상대 오차가 rtol 이하인지 확인"""
    errors = check_gradients(build_loss, inputs, eps)
    bad = {name: err for name, err in errors.items() if not err <= rtol}
    if bad:
        raise AssertionError(f"그래디언트 불일치: {bad}")
    return errors
