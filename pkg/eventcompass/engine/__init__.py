"""
EventCompass Engine Module

numpy 기반 역전파 텐서 엔진
"""

from .tensor import (
    Tensor, Tape, GradientTable, backward, precision,
    get_default_dtype, set_default_dtype, active_tape
)
from .optim import AdamW, SGD
from . import functional

__all__ = [
    "Tensor", "Tape", "GradientTable", "backward", "precision",
    "get_default_dtype", "set_default_dtype", "active_tape",
    "AdamW", "SGD", "functional"
]
