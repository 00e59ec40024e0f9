"""
EventCompass - 이벤트 카메라 자기지도 dense 사전학습

이벤트 시뮬레이션, 복셀 그리드 이벤트 이미지, 패치 / 컨텍스트 / 이미지 수준
teacher-student 자기증류와 선형 프로브 평가
"""

__version__ = "0.1.0"
__author__ = "gum798"
__email__ = "gum798@users.noreply.github.com"

from .config.settings import Settings
from .core.data_manager import DataManager
from .simulation.dataset import pack_dataset
from .analysis.context_miner import mine_contexts
from .network.pair import StudentTeacherPair
from .training.trainer import Trainer, train_loop
from .evaluation.probe import run_probe
from .reporting.ablation_report import run_ablation

__all__ = [
    "Settings",
    "DataManager",
    "pack_dataset",
    "mine_contexts",
    "StudentTeacherPair",
    "Trainer",
    "train_loop",
    "run_probe",
    "run_ablation"
]
