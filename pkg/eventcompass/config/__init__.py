"""
EventCompass Configuration Module

설정 관리 및 환경 변수 처리
"""

from .settings import (
    Settings, SimConfig, DatasetConfig, AugmentConfig, ModelConfig,
    TrainConfig, ProbeConfig, LoggingConfig
)

__all__ = [
    "Settings", "SimConfig", "DatasetConfig", "AugmentConfig", "ModelConfig",
    "TrainConfig", "ProbeConfig", "LoggingConfig"
]
