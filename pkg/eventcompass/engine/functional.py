"""
미분 가능한 연산 모음

브로드캐스팅은 (같은 모양) / (스칼라) / (마지막 축 벡터) 세 경우만 허용한다.
그 외에는 reshape 를 명시적으로 호출해야 한다.
"""

from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import erf, logsumexp

from ..core.exceptions import NonFiniteError, ShapeError
from .tensor import Tensor, as_tensor, make_result

ArrayLike = Union[Tensor, np.ndarray, float]

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _check_broadcast(a_shape, b_shape, op: str):
    if a_shape == b_shape:
        return
    for big, small in ((a_shape, b_shape), (b_shape, a_shape)):
        if int(np.prod(small)) == 1 and len(small) <= 1:
            return
        if len(small) == 1 and len(big) >= 1 and small[0] == big[-1]:
            return
    raise ShapeError(f"{op}: 허용되지 않는 브로드캐스팅 {a_shape} vs {b_shape}")


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """브로드캐스팅된 그래디언트를 원래 모양으로 합산"""
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------- 기본 산술

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape, 'add')
    a_shape, b_shape = a.shape, b.shape

    def _backward(g):
        return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

    return make_result(a.data + b.data, (a, b), _backward, 'add')


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape, 'sub')
    a_shape, b_shape = a.shape, b.shape

    def _backward(g):
        return _unbroadcast(g, a_shape), -_unbroadcast(g, b_shape)

    return make_result(a.data - b.data, (a, b), _backward, 'sub')


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape, 'mul')
    a_data, b_data = a.data, b.data

    def _backward(g):
        return _unbroadcast(g * b_data, a_data.shape), _unbroadcast(g * a_data, b_data.shape)

    return make_result(a_data * b_data, (a, b), _backward, 'mul')


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def _backward(g):
        return (g * factor,)

    return make_result(a.data * np.asarray(factor, dtype=a.dtype), (a,), _backward, 'scale')


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(…, n, k) @ (…, k, m), 배치 차원은 동일해야 함"""
    if a.ndim < 2 or a.ndim != b.ndim:
        raise ShapeError(f"matmul: 차원 불일치 {a.shape} @ {b.shape}")
    if a.shape[:-2] != b.shape[:-2] or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: 모양 불일치 {a.shape} @ {b.shape}")
    a_data, b_data = a.data, b.data

    def _backward(g):
        return g @ np.swapaxes(b_data, -1, -2), np.swapaxes(a_data, -1, -2) @ g

    return make_result(a_data @ b_data, (a, b), _backward, 'matmul')


def log(x: Tensor) -> Tensor:
    x_data = x.data
    if np.any(x_data <= 0):
        raise NonFiniteError("log: 0 이하 입력")

    def _backward(g):
        return (g / x_data,)

    return make_result(np.log(x_data), (x,), _backward, 'log')


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def _backward(g):
        return (g * out,)

    return make_result(out, (x,), _backward, 'exp')


def gelu(x: Tensor) -> Tensor:
    """정확한 (erf) GELU"""
    x_data = x.data
    cdf = 0.5 * (1.0 + erf(x_data / _SQRT2))

    def _backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x_data * x_data)
        return (g * (cdf + x_data * pdf),)

    return make_result((x_data * cdf).astype(x.dtype, copy=False), (x,), _backward, 'gelu')


# ---------------------------------------------------------------- 축 연산

def sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    shape = x.shape

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return make_result(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), _backward, 'sum')


def mean(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    shape = x.shape
    count = x.data.size if axis is None else shape[axis]

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, shape).copy(),)

    return make_result(np.asarray(x.data.mean(axis=axis, keepdims=keepdims)), (x,), _backward, 'mean')


def reshape(x: Tensor, shape) -> Tensor:
    original = x.shape

    def _backward(g):
        return (g.reshape(original),)

    return make_result(x.data.reshape(shape), (x,), _backward, 'reshape')


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def _backward(g):
        return (np.transpose(g, inverse),)

    return make_result(np.transpose(x.data, axes), (x,), _backward, 'transpose')


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: 빈 입력")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def _backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                       _backward, 'concat')


def gather_rows(x: Tensor, index) -> Tensor:
    """x[index] (첫 번째 축)"""
    index = np.asarray(index, dtype=np.int64)
    if index.ndim != 1:
        raise ShapeError("gather_rows: 1차원 인덱스만 지원")
    if index.size and (index.min() < 0 or index.max() >= x.shape[0]):
        raise ShapeError(f"gather_rows: 인덱스 범위 초과 (rows={x.shape[0]})")
    shape = x.shape

    def _backward(g):
        grad = np.zeros(shape, dtype=g.dtype)
        np.add.at(grad, index, g)
        return (grad,)

    return make_result(x.data[index], (x,), _backward, 'gather_rows')


def mask_rows(x: Tensor, mask, token: Tensor) -> Tensor:
    """mask 가 True 인 행을 token 벡터로 교체"""
    mask = np.asarray(mask, dtype=bool)
    if x.ndim != 2 or mask.shape != (x.shape[0],) or token.shape != (x.shape[1],):
        raise ShapeError(f"mask_rows: 모양 불일치 x={x.shape} mask={mask.shape} token={token.shape}")
    keep = (~mask)[:, None]

    def _backward(g):
        return g * keep, g[mask].sum(axis=0)

    out = np.where(mask[:, None], token.data[None, :], x.data)
    return make_result(out, (x, token), _backward, 'mask_rows')


# ---------------------------------------------------------------- 정규화

def layernorm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """마지막 축 LayerNorm"""
    x_data = x.data
    mu = x_data.mean(axis=-1, keepdims=True)
    centered = x_data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    x_hat = centered * rstd
    gamma_data = gamma.data

    def _backward(g):
        d_hat = g * gamma_data
        dx = rstd * (d_hat - d_hat.mean(axis=-1, keepdims=True)
                     - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True))
        return dx, _unbroadcast(g * x_hat, gamma_data.shape), _unbroadcast(g, beta.shape)

    return make_result(x_hat * gamma_data + beta.data, (x, gamma, beta), _backward, 'layernorm')


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    x_data = x.data
    norm = np.sqrt((x_data * x_data).sum(axis=axis, keepdims=True))
    clipped = np.maximum(norm, eps)
    y = x_data / clipped

    def _backward(g):
        inside = norm >= eps
        proj = (g * y).sum(axis=axis, keepdims=True)
        return (np.where(inside, (g - y * proj) / clipped, g / clipped),)

    return make_result(y, (x,), _backward, 'l2_normalize')


def _softmax_array(z: np.ndarray, axis: int) -> np.ndarray:
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _check_temperature(temperature: float):
    if not temperature > 0:
        raise ValueError(f"temperature 는 양수여야 합니다: {temperature}")


def softmax(x: Tensor, axis: int = -1, temperature: float = 1.0) -> Tensor:
    """max 를 빼는 안정화 softmax(x / τ)"""
    _check_temperature(temperature)
    if not np.all(np.isfinite(x.data)):
        raise NonFiniteError("softmax: 입력에 NaN/Inf")
    y = _softmax_array(x.data / temperature, axis)

    def _backward(g):
        dz = y * (g - (g * y).sum(axis=axis, keepdims=True))
        return (dz / temperature,)

    return make_result(y, (x,), _backward, 'softmax')


def log_softmax(x: Tensor, axis: int = -1, temperature: float = 1.0) -> Tensor:
    _check_temperature(temperature)
    z = x.data / temperature
    y = z - logsumexp(z, axis=axis, keepdims=True)
    probs = np.exp(y)

    def _backward(g):
        dz = g - probs * g.sum(axis=axis, keepdims=True)
        return (dz / temperature,)

    return make_result(y.astype(x.dtype, copy=False), (x,), _backward, 'log_softmax')


# ---------------------------------------------------------------- 손실

def teacher_distribution(logits, temperature: float, center=None) -> np.ndarray:
    """teacher 분포 softmax((logits − center) / τ_t), 그래디언트 없음"""
    _check_temperature(temperature)
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    if center is not None:
        data = data - center
    return _softmax_array(data / temperature, -1)


def entropy(probs: np.ndarray) -> np.ndarray:
    """분포별 엔트로피 (마지막 축)"""
    safe = np.where(probs > 0, probs, 1.0)
    return -(probs * np.log(safe)).sum(axis=-1)


def cross_entropy_distr(t_emb, s_emb: Tensor, tau_t: float, tau_s: float, center=None) -> Tensor:
    """CE(P(t/τ_t), P(s/τ_s)) = −⟨P_t, log P_s⟩

    teacher 쪽은 상수로 취급한다. 2차원 입력이면 행 평균.
    """
    t_data = t_emb.data if isinstance(t_emb, Tensor) else np.asarray(t_emb)
    if t_data.shape != s_emb.shape:
        raise ShapeError(f"cross_entropy_distr: 길이 불일치 {t_data.shape} vs {s_emb.shape}")
    if s_emb.ndim not in (1, 2):
        raise ShapeError("cross_entropy_distr: 1차원 또는 2차원 입력만 지원")
    _check_temperature(tau_s)

    p_teacher = teacher_distribution(t_data, tau_t, center).astype(s_emb.dtype, copy=False)
    z = s_emb.data / tau_s
    log_p_student = z - logsumexp(z, axis=-1, keepdims=True)
    rows = 1 if s_emb.ndim == 1 else s_emb.shape[0]
    value = -(p_teacher * log_p_student).sum() / rows

    def _backward(g):
        p_student = np.exp(log_p_student)
        return ((p_student - p_teacher) * (g / (tau_s * rows)),)

    return make_result(np.asarray(value, dtype=s_emb.dtype), (s_emb,), _backward, 'cross_entropy_distr')


def cross_entropy_labels(logits: Tensor, labels) -> Tensor:
    """정수 라벨 다항 로지스틱 손실 (행 평균)"""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy_labels: 모양 불일치 {logits.shape} vs {labels.shape}")
    z = logits.data
    log_probs = z - logsumexp(z, axis=-1, keepdims=True)
    rows = np.arange(len(labels))
    value = -log_probs[rows, labels].mean()

    def _backward(g):
        grad = np.exp(log_probs)
        grad[rows, labels] -= 1.0
        return (grad * (g / len(labels)),)

    return make_result(np.asarray(value, dtype=logits.dtype), (logits,), _backward, 'cross_entropy_labels')
