"""
자기지도 손실

- L_patch: 마스킹된 패치에서 teacher(x★) ↔ student(masked x★) 분포 CE
- L_context: 컨텍스트별 풀링 임베딩 CE (teacher x⁺ 클러스터 → x★ 로 전이)
- L_image: 평균 풀링 이미지 임베딩 CE
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..analysis.context_miner import ContextAssignment, mine_contexts, transfer_assignments
from ..augmentation.patches import CorrespondenceMap, MaskVector
from ..core.exceptions import DegenerateAugmentationError, ShapeError
from ..engine import functional as F
from ..engine.tensor import Tensor
from ..network.pair import SSLNetwork


@dataclass
class LossReport:
    """스텝별 손실 / 통계"""
    step: int
    l_patch: float
    l_context: float
    l_image: float
    l_total: float
    masked_patches: int
    contexts_used: float
    teacher_entropy: float
    teacher_entropy_min: float = 0.0
    teacher_entropy_max: float = 0.0
    lr: float = 0.0
    momentum: float = 0.0

    def to_row(self) -> Dict:
        """metrics.csv 한 행"""
        return {
            'step': self.step,
            'L_patch': self.l_patch,
            'L_context': self.l_context,
            'L_image': self.l_image,
            'L_total': self.l_total,
            'teacher_entropy': self.teacher_entropy,
            'lr': self.lr,
            'momentum': self.momentum,
        }

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class ContextLossInfo:
    """L_context 계산 부산물 (centering / 리포트용)"""
    a_plus: ContextAssignment
    a_star: ContextAssignment
    used: List[int] = field(default_factory=list)
    teacher_logits: Optional[np.ndarray] = None


def loss_patch(teacher_logits, student_logits: Tensor, mask: MaskVector, teacher_temp: float,
               student_temp: float, center: Optional[np.ndarray] = None) -> Tensor:
    """(1/‖m‖)·Σ_{m_i=1} CE(t_i, s_i)"""
    t_data = teacher_logits.data if isinstance(teacher_logits, Tensor) else np.asarray(teacher_logits)
    if t_data.shape != student_logits.shape:
        raise ShapeError(f"loss_patch: 모양 불일치 {t_data.shape} vs {student_logits.shape}")
    if len(mask) != student_logits.shape[0]:
        raise ShapeError(f"loss_patch: 마스크 길이 {len(mask)} ≠ 패치 수 {student_logits.shape[0]}")
    if mask.count == 0:
        raise ValueError("loss_patch: 마스킹된 패치가 없습니다")

    rows = mask.indices
    return F.cross_entropy_distr(t_data[rows], F.gather_rows(student_logits, rows),
                                 teacher_temp, student_temp, center)


def loss_context(student_features: Tensor, teacher_features, corr: CorrespondenceMap,
                 student: SSLNetwork, teacher: SSLNetwork, num_contexts: int, iters: int,
                 rng: np.random.Generator, teacher_temp: float, student_temp: float,
                 center: Optional[np.ndarray] = None, restarts: int = 1):
    """컨텍스트 수준 CE 평균 → (loss, ContextLossInfo)

    teacher_features 는 teacher 백본의 x⁺ 패치 특징 (상수),
    student_features 는 student 백본의 masked x★ 패치 특징.
    """
    z_plus = teacher_features.data if isinstance(teacher_features, Tensor) else np.asarray(teacher_features)
    if len(corr) != student_features.shape[0]:
        raise ShapeError(f"loss_context: 대응 길이 {len(corr)} ≠ 패치 수 {student_features.shape[0]}")

    _, a_plus = mine_contexts(z_plus, num_contexts, iters, rng, restarts)
    a_star = transfer_assignments(a_plus, corr)

    used, t_logits, s_logits = [], [], []
    for k in range(num_contexts):
        t_members = a_plus.members(k)
        s_members = a_star.members(k)
        if len(t_members) == 0 or len(s_members) == 0:
            continue
        t_embed = teacher.context_head(teacher.context_pool(z_plus[t_members]))
        s_embed = student.context_head(student.context_pool(F.gather_rows(student_features, s_members)))
        used.append(k)
        t_logits.append(t_embed.data)
        s_logits.append(s_embed)

    if not used:
        raise DegenerateAugmentationError(
            f"양쪽 모두 비어 있지 않은 컨텍스트가 없습니다 (K={num_contexts}, 유효 대응 {corr.num_valid}개)")

    teacher_logits = np.concatenate(t_logits, axis=0)
    student_logits = s_logits[0] if len(s_logits) == 1 else F.concat(s_logits, axis=0)
    loss = F.cross_entropy_distr(teacher_logits, student_logits, teacher_temp, student_temp, center)
    return loss, ContextLossInfo(a_plus, a_star, used, teacher_logits)


def loss_image(student_features: Tensor, teacher_features, student: SSLNetwork, teacher: SSLNetwork,
               teacher_temp: float, student_temp: float, center: Optional[np.ndarray] = None):
    """평균 풀링 → 이미지 헤드 → CE, (loss, teacher 로짓)"""
    z_plus = teacher_features.data if isinstance(teacher_features, Tensor) else np.asarray(teacher_features)
    t_embed = teacher.image_head(z_plus.mean(axis=0, keepdims=True))
    s_embed = student.image_head(F.mean(student_features, axis=0, keepdims=True))
    loss = F.cross_entropy_distr(t_embed.data, s_embed, teacher_temp, student_temp, center)
    return loss, t_embed.data
