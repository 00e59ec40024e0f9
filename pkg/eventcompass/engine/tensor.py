"""
역전파 테이프 기반 텐서

스텝마다 새 Tape를 만들고, 활성 테이프 안에서 requires_grad 입력을 가진
연산만 노드로 기록한다. 테이프 밖의 연산(teacher forward 등)은 기록되지 않는다.
"""

import contextlib
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import NonFiniteError, ShapeError

_state = threading.local()


def _tape_stack() -> List["Tape"]:
    if not hasattr(_state, 'tapes'):
        _state.tapes = []
    return _state.tapes


_DEFAULT_DTYPE = {'dtype': np.dtype(np.float32)}


def get_default_dtype() -> np.dtype:
    """현재 기본 부동소수 타입"""
    return _DEFAULT_DTYPE['dtype']


def set_default_dtype(dtype) -> None:
    """기본 부동소수 타입 변경 (float32 / float64)"""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"지원하지 않는 dtype: {dtype}")
    _DEFAULT_DTYPE['dtype'] = dtype


@contextlib.contextmanager
def precision(dtype) -> Iterator[None]:
    """블록 안에서만 기본 dtype 변경 (gradient check 는 float64)"""
    previous = get_default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def active_tape() -> Optional["Tape"]:
    """현재 스레드의 활성 테이프"""
    stack = _tape_stack()
    return stack[-1] if stack else None


@dataclass
class TapeNode:
    """테이프에 기록된 연산"""
    op: str
    inputs: Tuple[Optional[int], ...]
    backward: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]]


class Tape:
    """연산 기록 테이프 (한 학습 스텝 전용)"""

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.leaves: Dict[int, "Tensor"] = {}

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def register_leaf(self, tensor: "Tensor") -> int:
        """leaf 텐서를 노드로 등록"""
        node_id = len(self.nodes)
        self.nodes.append(TapeNode('leaf', (), None))
        self.leaves[node_id] = tensor
        tensor.node_id = node_id
        tensor._tape = self
        return node_id

    def record(self, op: str, inputs: Tuple[Optional[int], ...], backward) -> int:
        """연산 노드 기록, node_id 반환"""
        node_id = len(self.nodes)
        self.nodes.append(TapeNode(op, inputs, backward))
        return node_id


class Tensor:
    """numpy 버퍼 + 테이프 노드 식별자"""

    __slots__ = ('data', 'requires_grad', 'node_id', '_tape', 'name')

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        self.data = np.array(data, dtype=dtype or get_default_dtype())
        self.requires_grad = requires_grad
        self.node_id: Optional[int] = None
        self._tape: Optional[Tape] = None
        self.name = name

    @classmethod
    def wrap(cls, data: np.ndarray) -> "Tensor":
        """복사 없이 배열을 감싸기"""
        obj = cls.__new__(cls)
        obj.data = data
        obj.requires_grad = False
        obj.node_id = None
        obj._tape = None
        obj.name = None
        return obj

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def node_on(self, tape: Tape) -> int:
        """tape 위의 node_id (처음 보는 텐서면 leaf 로 등록)"""
        if self._tape is tape and self.node_id is not None:
            return self.node_id
        return tape.register_leaf(self)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    # 연산자는 functional 에 위임
    def __add__(self, other):
        from . import functional as F
        return F.add(self, other)

    def __radd__(self, other):
        from . import functional as F
        return F.add(self, other)

    def __sub__(self, other):
        from . import functional as F
        return F.sub(self, other)

    def __mul__(self, other):
        from . import functional as F
        if isinstance(other, (int, float)):
            return F.scale(self, other)
        return F.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        from . import functional as F
        return F.scale(self, -1.0)

    def __matmul__(self, other):
        from . import functional as F
        return F.matmul(self, other)


def as_tensor(value) -> Tensor:
    """상수를 Tensor 로 감싸기"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward, op: str) -> Tensor:
    """연산 결과 생성 + 유한성 검사 + 테이프 기록"""
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"'{op}' 연산 결과에 NaN/Inf 가 있습니다")

    out = Tensor.wrap(data)
    tape = active_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        inputs = tuple(p.node_on(tape) if p.requires_grad else None for p in parents)
        out.requires_grad = True
        out.node_id = tape.record(op, inputs, backward)
        out._tape = tape
    return out


class GradientTable:
    """leaf 텐서별 그래디언트"""

    def __init__(self):
        self._entries: Dict[int, Tuple[Tensor, np.ndarray]] = {}

    def set(self, tensor: Tensor, grad: np.ndarray):
        self._entries[id(tensor)] = (tensor, grad)

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        entry = self._entries.get(id(tensor))
        if entry is None:
            return np.zeros_like(tensor.data)
        return entry[1]

    def __contains__(self, tensor: Tensor) -> bool:
        return id(tensor) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def leaves(self) -> List[Tensor]:
        return [tensor for tensor, _ in self._entries.values()]

    def items(self):
        return list(self._entries.values())


def backward(loss: Tensor, tape: Optional[Tape] = None) -> GradientTable:
    """스칼라 loss 에서 역전파, 테이프의 모든 leaf 에 대한 그래디언트"""
    if tape is None:
        tape = loss._tape
    if loss.data.size != 1 or loss.data.ndim > 1:
        raise ShapeError(f"backward 는 스칼라 loss 만 지원합니다: shape={loss.shape}")
    if tape is None or loss._tape is not tape or loss.node_id is None:
        raise ValueError("loss 가 테이프에 기록되어 있지 않습니다")

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    leaf_grads: Dict[int, np.ndarray] = {}

    for node_id in range(loss.node_id, -1, -1):
        grad = grads.pop(node_id, None)
        if grad is None:
            continue
        node = tape.nodes[node_id]
        if node.op == 'leaf':
            leaf_grads[node_id] = grad
            continue
        input_grads = node.backward(grad)
        for input_id, input_grad in zip(node.inputs, input_grads):
            if input_id is None or input_grad is None:
                continue
            if input_id in grads:
                grads[input_id] = grads[input_id] + input_grad
            else:
                grads[input_id] = input_grad

    table = GradientTable()
    for node_id, leaf in tape.leaves.items():
        grad = leaf_grads.get(node_id)
        if grad is None:
            grad = np.zeros_like(leaf.data)
        table.set(leaf, grad.reshape(leaf.shape).astype(leaf.dtype, copy=False))
    return table
