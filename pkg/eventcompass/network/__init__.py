"""
EventCompass Network Module

ViT 백본, 투영 헤드, 어텐션 풀링, student / teacher 쌍
"""

from .layers import Module, Linear, LayerNorm
from .vit import ViTBackbone, TransformerBlock, MultiHeadSelfAttention
from .heads import ProjectionHead
from .pool import AttentionPool, attention_pool
from .pair import SSLNetwork, StudentTeacherPair, ema_update, teacher_center_update, HEAD_ROLES

__all__ = [
    "Module", "Linear", "LayerNorm",
    "ViTBackbone", "TransformerBlock", "MultiHeadSelfAttention",
    "ProjectionHead", "AttentionPool", "attention_pool",
    "SSLNetwork", "StudentTeacherPair", "ema_update", "teacher_center_update", "HEAD_ROLES"
]
