"""
컨텍스트 마이닝
이미지별 teacher 패치 특징 K-means, 아핀 대응을 통한 할당 전이, 컨텍스트별 특징 수집
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from sklearn.cluster import kmeans_plusplus

from ..augmentation.patches import CorrespondenceMap
from ..core.exceptions import NumericError, ShapeError
from ..engine import functional as F
from ..engine.tensor import Tensor
from ..utils.logger import get_logger

logger = get_logger(__name__)

OBJECTIVE_TOL = 1e-9


@dataclass(frozen=True)
class ContextSet:
    """K 개 컨텍스트 중심과 멤버 수"""
    centers: np.ndarray
    counts: np.ndarray
    objective: float

    @property
    def num_contexts(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class ContextAssignment:
    """one-hot 할당 a (N×K) 와 패치별 유효 플래그"""
    onehot: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        onehot = np.array(self.onehot, dtype=np.int8)
        valid = np.array(self.valid, dtype=bool)
        if onehot.ndim != 2 or valid.shape != (onehot.shape[0],):
            raise ShapeError(f"할당 모양 불일치: {onehot.shape} / {valid.shape}")
        onehot[~valid] = 0
        onehot.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, 'onehot', onehot)
        object.__setattr__(self, 'valid', valid)

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_contexts: int,
                    valid: Optional[np.ndarray] = None) -> "ContextAssignment":
        labels = np.asarray(labels, dtype=np.int64)
        valid = np.ones(len(labels), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
        onehot = np.zeros((len(labels), num_contexts), dtype=np.int8)
        rows = np.flatnonzero(valid)
        onehot[rows, labels[rows]] = 1
        return cls(onehot, valid)

    @property
    def num_patches(self) -> int:
        return self.onehot.shape[0]

    @property
    def num_contexts(self) -> int:
        return self.onehot.shape[1]

    @property
    def labels(self) -> np.ndarray:
        """컨텍스트 번호, 무효 패치는 -1"""
        return np.where(self.valid, self.onehot.argmax(axis=1), -1)

    def members(self, k: int) -> np.ndarray:
        """컨텍스트 k 의 유효 패치 인덱스 (패치 순서)"""
        return np.flatnonzero((self.onehot[:, k] == 1) & self.valid)

    def counts(self) -> np.ndarray:
        return self.onehot.sum(axis=0).astype(np.int64)


def squared_distances(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = features[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=-1)


def assign(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """가장 가까운 중심 (동률이면 낮은 번호)"""
    return np.argmin(squared_distances(features, centers), axis=1)


def objective(features: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    """Σ‖z_i − c_{label(i)}‖²"""
    diff = features - centers[labels]
    return float((diff * diff).sum())


def update_centers(features: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """평균 갱신, 빈 클러스터는 자기 중심에서 가장 먼 점으로 재시드"""
    k_count = centers.shape[0]
    new_centers = centers.copy()
    residual = ((features - centers[labels]) ** 2).sum(axis=1)
    for k in range(k_count):
        members = labels == k
        if members.any():
            new_centers[k] = features[members].mean(axis=0)
        else:
            farthest = int(np.argmax(residual))
            new_centers[k] = features[farthest]
            residual[farthest] = -1.0
    return new_centers


def lloyd(features: np.ndarray, centers: np.ndarray, iters: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """Lloyd 반복, 목적 함수 비증가 확인"""
    labels = assign(features, centers)
    previous = objective(features, centers, labels)
    for _ in range(iters):
        centers = update_centers(features, labels, centers)
        new_labels = assign(features, centers)
        current = objective(features, centers, new_labels)
        if current > previous + OBJECTIVE_TOL * max(1.0, previous):
            raise NumericError(f"K-means 목적 함수가 증가했습니다: {previous:.12g} → {current:.12g}")
        converged = np.array_equal(new_labels, labels)
        labels, previous = new_labels, current
        if converged:
            break
    return centers, labels, previous


def kmeans(features, num_contexts: int, iters: int, rng: np.random.Generator,
           restarts: int = 1) -> Tuple[ContextSet, ContextAssignment]:
    """k-means++ 초기화 + Lloyd, restarts 중 목적 함수 최소 결과"""
    features = np.asarray(features.data if isinstance(features, Tensor) else features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"kmeans: (N, D) 특징이 필요합니다: {features.shape}")
    n = features.shape[0]
    if num_contexts < 1 or n < num_contexts:
        raise ValueError(f"kmeans: N({n}) ≥ K({num_contexts}) ≥ 1 이어야 합니다")

    best = None
    for _ in range(max(1, restarts)):
        init, _ = kmeans_plusplus(features, num_contexts, random_state=int(rng.integers(0, 2**31 - 1)))
        centers, labels, value = lloyd(features, init, iters)
        if best is None or value < best[2]:
            best = (centers, labels, value)

    centers, labels, value = best
    assignment = ContextAssignment.from_labels(labels, num_contexts)
    return ContextSet(centers, assignment.counts(), value), assignment


def mine_contexts(features, num_contexts: int, iters: int, rng: np.random.Generator,
                  restarts: int = 1) -> Tuple[ContextSet, ContextAssignment]:
    """teacher 특징을 tape 에서 분리하고 L2 정규화 후 클러스터링"""
    data = np.array(features.data if isinstance(features, Tensor) else features, dtype=np.float64)
    norms = np.maximum(np.linalg.norm(data, axis=1, keepdims=True), 1e-12)
    return kmeans(data / norms, num_contexts, iters, rng, restarts)


def transfer_assignments(a_plus: ContextAssignment, corr: CorrespondenceMap) -> ContextAssignment:
    """a★[i] = a⁺[corr(i)], 대응이 없으면 무효"""
    indices = corr.indices
    valid = corr.valid.copy()
    safe = np.where(valid, indices, 0)
    valid &= a_plus.valid[safe]
    onehot = np.where(valid[:, None], a_plus.onehot[safe], 0)
    return ContextAssignment(onehot, valid)


def gather_context(features: Union[Tensor, np.ndarray], assignment: ContextAssignment, k: int):
    """컨텍스트 k 에 속한 유효 패치 특징 (패치 순서)"""
    members = assignment.members(k)
    if isinstance(features, Tensor):
        return F.gather_rows(features, members)
    return np.asarray(features)[members]
