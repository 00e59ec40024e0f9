"""
EventCompass Analysis Module

컨텍스트 마이닝 (K-means, 할당 전이)
"""

from .context_miner import (
    ContextSet, ContextAssignment, kmeans, mine_contexts,
    transfer_assignments, gather_context
)

__all__ = [
    "ContextSet", "ContextAssignment", "kmeans", "mine_contexts",
    "transfer_assignments", "gather_context"
]
