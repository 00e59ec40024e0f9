"""
EventCompass Utilities Module

유틸리티 함수 및 헬퍼
"""

from .logger import get_logger, setup_logging
from .formatters import format_loss, format_percentage, format_toml_value
from .seeding import derive_seed, make_rng

__all__ = [
    "get_logger", "setup_logging",
    "format_loss", "format_percentage", "format_toml_value",
    "derive_seed", "make_rng"
]
