"""
EventCompass Simulation Module

대비 임계값 이벤트 시뮬레이터와 데이터셋 생성
"""

from .models import CameraTrajectory, TrajectoryPattern, ShapeSpec, ShapeKind, SceneFrames
from .emulator import simulate_from_frames
from .trajectory import generate_trajectory
from .scenes import MovingShapesScene, MovingShapesSource, ImageSource, build_sources
from .dataset import warp_and_simulate, pack_dataset, SIMULATOR_VERSION

__all__ = [
    "CameraTrajectory", "TrajectoryPattern", "ShapeSpec", "ShapeKind", "SceneFrames",
    "simulate_from_frames", "generate_trajectory",
    "MovingShapesScene", "MovingShapesSource", "ImageSource", "build_sources",
    "warp_and_simulate", "pack_dataset", "SIMULATOR_VERSION"
]
