"""
작은 ViT 백본 (pre-norm 블록 + [MASK] 토큰)
"""

from typing import Optional

import numpy as np

from ..augmentation.patches import MaskVector
from ..config.settings import ModelConfig
from ..core.exceptions import ShapeError
from ..engine import functional as F
from ..engine.tensor import Tensor, as_tensor
from .layers import LayerNorm, Linear, Module, trunc_normal


class MultiHeadSelfAttention(Module):
    """(N, D) 토큰 멀티헤드 self-attention"""

    def __init__(self, dim: int, num_heads: int, rng: np.random.Generator):
        super().__init__()
        if dim % num_heads:
            raise ShapeError(f"dim {dim} 이 num_heads {num_heads} 로 나누어지지 않습니다")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.query = self.add_module('query', Linear(dim, dim, rng))
        self.key = self.add_module('key', Linear(dim, dim, rng))
        self.value = self.add_module('value', Linear(dim, dim, rng))
        self.proj = self.add_module('proj', Linear(dim, dim, rng))

    def _split_heads(self, x: Tensor) -> Tensor:
        n = x.shape[0]
        return F.transpose(F.reshape(x, (n, self.num_heads, self.head_dim)), (1, 0, 2))

    def forward(self, x: Tensor) -> Tensor:
        n = x.shape[0]
        q = self._split_heads(self.query(x))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self.value(x))

        scores = F.scale(F.matmul(q, F.transpose(k, (0, 2, 1))), 1.0 / np.sqrt(self.head_dim))
        attn = F.softmax(scores, axis=-1)
        heads = F.matmul(attn, v)
        merged = F.reshape(F.transpose(heads, (1, 0, 2)), (n, self.dim))
        return self.proj(merged)


class TransformerBlock(Module):
    """x + MSA(LN(x)), x + MLP(LN(x))"""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int, rng: np.random.Generator):
        super().__init__()
        self.norm1 = self.add_module('norm1', LayerNorm(dim))
        self.attn = self.add_module('attn', MultiHeadSelfAttention(dim, num_heads, rng))
        self.norm2 = self.add_module('norm2', LayerNorm(dim))
        self.fc1 = self.add_module('fc1', Linear(dim, dim * mlp_ratio, rng))
        self.fc2 = self.add_module('fc2', Linear(dim * mlp_ratio, dim, rng))

    def forward(self, x: Tensor) -> Tensor:
        x = F.add(x, self.attn(self.norm1(x)))
        hidden = F.gelu(self.fc1(self.norm2(x)))
        return F.add(x, self.fc2(hidden))


class ViTBackbone(Module):
    """패치 임베딩 → [MASK] 치환 → 위치 임베딩 → L 블록 → LN"""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.num_patches = (config.image_size // config.patch_size) ** 2
        self.patch_dim = config.patch_size * config.patch_size * config.in_channels
        self.embed_dim = config.embed_dim

        self.patch_embed = self.add_module('patch_embed', Linear(self.patch_dim, config.embed_dim, rng))
        self.pos_embed = self.register_parameter('pos_embed', trunc_normal(rng, (self.num_patches, config.embed_dim)))
        self.mask_token = self.register_parameter('mask_token', trunc_normal(rng, (config.embed_dim,)))
        self.blocks = []
        for i in range(config.depth):
            block = TransformerBlock(config.embed_dim, config.num_heads, config.mlp_ratio, rng)
            self.blocks.append(self.add_module(f'blocks.{i}', block))
        self.norm = self.add_module('norm', LayerNorm(config.embed_dim))

    def encode(self, patches, mask: Optional[MaskVector] = None) -> Tensor:
        """(N, P²·C) 패치 픽셀 → (N, D) 패치 특징"""
        patches = as_tensor(patches)
        if patches.shape != (self.num_patches, self.patch_dim):
            raise ShapeError(f"encode: 패치 모양 {patches.shape}, 기대 ({self.num_patches}, {self.patch_dim})")

        tokens = self.patch_embed(patches)
        if mask is not None:
            if len(mask) != self.num_patches:
                raise ShapeError(f"encode: 마스크 길이 {len(mask)} ≠ 패치 수 {self.num_patches}")
            if mask.count:
                tokens = F.mask_rows(tokens, mask.mask, self.mask_token)
        x = F.add(tokens, self.pos_embed)
        for block in self.blocks:
            x = block(x)
        return self.norm(x)

    def forward(self, patches, mask: Optional[MaskVector] = None) -> Tensor:
        return self.encode(patches, mask)
