"""
student / teacher 네트워크 쌍, EMA 와 teacher centering
"""

from typing import Dict, Iterator, Tuple

import numpy as np

from ..config.settings import ModelConfig
from ..core.exceptions import ShapeError
from ..engine.tensor import Tensor
from ..utils.logger import get_logger
from .heads import ProjectionHead
from .layers import Module
from .pool import AttentionPool
from .vit import ViTBackbone

logger = get_logger(__name__)

HEAD_ROLES = ('patch', 'context', 'image')


class SSLNetwork(Module):
    """백본 F + 헤드 H^m / H^c / H^img + 컨텍스트 풀"""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.backbone = self.add_module('backbone', ViTBackbone(config, rng))

        def head() -> ProjectionHead:
            return ProjectionHead(config.embed_dim, config.head_hidden_dim,
                                  config.head_bottleneck_dim, config.out_dim, rng)

        self.patch_head = self.add_module('patch_head', head())
        self.context_head = self.add_module('context_head', head())
        self.image_head = self.add_module('image_head', head())
        self.context_pool = self.add_module('context_pool', AttentionPool(config.embed_dim, rng))

    def head(self, role: str) -> ProjectionHead:
        return {'patch': self.patch_head, 'context': self.context_head, 'image': self.image_head}[role]


def ema_update(teacher: Module, student: Module, momentum: float):
    """θ_t ← m·θ_t + (1−m)·θ_s (모든 텐서)"""
    if not 0.0 <= momentum <= 1.0:
        raise ValueError(f"momentum 은 [0, 1] 이어야 합니다: {momentum}")
    student_params = student.parameters()
    for name, t_param in teacher.named_parameters():
        s_param = student_params[name]
        t_param.data = (momentum * t_param.data + (1.0 - momentum) * s_param.data).astype(t_param.dtype, copy=False)


def teacher_center_update(center: np.ndarray, teacher_logits: np.ndarray, rate: float) -> np.ndarray:
    """center ← rate·center + (1−rate)·batch 평균"""
    logits = np.asarray(teacher_logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits[None, :]
    if logits.shape[-1] != center.shape[-1]:
        raise ShapeError(f"center 길이 {center.shape} 와 로짓 {logits.shape} 불일치")
    return rate * center + (1.0 - rate) * logits.mean(axis=0)


class StudentTeacherPair:
    """같은 구조의 student / teacher, teacher 는 gradient leaf 가 되지 않는다"""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.student = SSLNetwork(config, rng)
        # teacher 는 step 0 에서 student 복사본
        self.teacher = SSLNetwork(config, np.random.default_rng(0))
        self.teacher.load_state_dict(self.student.state_dict())
        self.teacher.requires_grad_(False)
        self.centers: Dict[str, np.ndarray] = {role: np.zeros(config.out_dim) for role in HEAD_ROLES}
        logger.debug(f"네트워크 생성: student 파라미터 {self.student.num_parameters():,}개")

    def ema_update(self, momentum: float):
        ema_update(self.teacher, self.student, momentum)

    def update_center(self, role: str, teacher_logits: np.ndarray, rate: float):
        self.centers[role] = teacher_center_update(self.centers[role], teacher_logits, rate)

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        """체크포인트용 (student/…, teacher/…, center/…)"""
        for name, tensor in self.student.named_parameters():
            yield f"student/{name}", tensor.data
        for name, tensor in self.teacher.named_parameters():
            yield f"teacher/{name}", tensor.data
        for role in HEAD_ROLES:
            yield f"center/{role}", self.centers[role]

    def load_tensors(self, tensors: Dict[str, np.ndarray]):
        self.student.load_state_dict({k[len("student/"):]: v for k, v in tensors.items() if k.startswith("student/")})
        self.teacher.load_state_dict({k[len("teacher/"):]: v for k, v in tensors.items() if k.startswith("teacher/")})
        for role in HEAD_ROLES:
            self.centers[role] = np.array(tensors[f"center/{role}"], dtype=np.float64)

    def teacher_leaves(self) -> Dict[int, Tensor]:
        return {id(t): t for _, t in self.teacher.named_parameters()}
