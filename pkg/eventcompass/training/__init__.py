"""
EventCompass Training Module

자기지도 손실, 스케줄, ECKP 체크포인트, 트레이너
"""

from .losses import LossReport, loss_patch, loss_context, loss_image
from .schedules import learning_rate_at, momentum_at
from .checkpoint import Checkpoint, encode_checkpoint, decode_checkpoint, save_checkpoint, load_checkpoint
from .trainer import Trainer, TrainResult, train_loop, run_sweep, append_metrics, METRICS_COLUMNS

__all__ = [
    "LossReport", "loss_patch", "loss_context", "loss_image",
    "learning_rate_at", "momentum_at",
    "Checkpoint", "encode_checkpoint", "decode_checkpoint", "save_checkpoint", "load_checkpoint",
    "Trainer", "TrainResult", "train_loop", "run_sweep", "append_metrics", "METRICS_COLUMNS"
]
