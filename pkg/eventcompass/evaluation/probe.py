"""
고정 특징 선형 프로브 (패치 단위 toy 분할)

teacher 백본 특징 추출 → 표준화 → 다항 로지스틱 회귀 (SGD + L2) → mIoU
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from ..augmentation.patches import PatchGrid
from ..config.settings import ModelConfig, ProbeConfig, Settings
from ..core.data_manager import DataManager
from ..core.exceptions import DatasetError, ShapeError
from ..engine import functional as F
from ..engine.optim import SGD
from ..engine.tensor import Tape, backward, precision
from ..network.layers import Linear, Module
from ..network.pair import SSLNetwork
from ..network.vit import ViTBackbone
from ..training.checkpoint import Checkpoint, checkpoint_id, load_checkpoint, save_checkpoint
from ..utils.formatters import format_percentage
from ..utils.logger import get_logger
from ..utils.seeding import make_rng

logger = get_logger(__name__)

BASELINE_KEY = 101


@dataclass
class FeatureSet:
    """샘플별 (N, D) 특징과 (N,) 패치 라벨"""
    sample_ids: List[str]
    features: List[np.ndarray]
    labels: List[np.ndarray]

    def stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.concatenate(self.features, axis=0), np.concatenate(self.labels, axis=0)

    def to_checkpoint(self, source: str) -> Checkpoint:
        tensors = {}
        for sample_id, feats, labels in zip(self.sample_ids, self.features, self.labels):
            tensors[f"features/{sample_id}"] = np.asarray(feats, dtype=np.float32)
            tensors[f"labels/{sample_id}"] = np.asarray(labels, dtype=np.int64)
        return Checkpoint(config={'kind': 'features', 'source': source}, step=0, tensors=tensors)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "FeatureSet":
        ids = [name[len("features/"):] for name in checkpoint.tensors if name.startswith("features/")]
        return cls(ids, [checkpoint.tensors[f"features/{i}"] for i in ids],
                   [checkpoint.tensors[f"labels/{i}"] for i in ids])


def patch_labels(label_map: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """패치 내 다수결 라벨 (동률이면 작은 클래스)"""
    label_map = np.asarray(label_map)
    if label_map.shape != (grid.height, grid.width):
        raise ShapeError(f"라벨 맵 모양 {label_map.shape} ≠ ({grid.height}, {grid.width})")
    patches = grid.patchify(label_map[None].astype(np.int64))
    num_classes = int(patches.max()) + 1
    counts = np.stack([(patches == c).sum(axis=1) for c in range(num_classes)], axis=1)
    return counts.argmax(axis=1).astype(np.int64)


def load_backbone(path: str) -> Tuple[ModelConfig, ViTBackbone]:
    """체크포인트의 teacher 백본"""
    checkpoint = load_checkpoint(path)
    settings = Settings.from_dict(checkpoint.config)
    network = SSLNetwork(settings.model, np.random.default_rng(0))
    prefix = "teacher/"
    network.load_state_dict({k[len(prefix):]: v for k, v in checkpoint.tensors.items() if k.startswith(prefix)})
    network.requires_grad_(False)
    return settings.model, network.backbone


def random_backbone(config: ModelConfig, seed: int) -> ViTBackbone:
    """무작위 초기화 기준선 백본"""
    network = SSLNetwork(config, make_rng(seed, BASELINE_KEY))
    network.requires_grad_(False)
    return network.backbone


def extract_features(backbone: ViTBackbone, data_manager: DataManager, grid: PatchGrid,
                     split: Optional[str] = None, threads: int = 1) -> FeatureSet:
    """마스킹 / 증강 없이 백본 적용"""
    records = data_manager.samples(split)
    if not records:
        raise DatasetError(f"'{split}' 분할에 샘플이 없습니다")

    def job(record):
        image = data_manager.event_image(record)
        feats = backbone.encode(grid.patchify(image.values)).data.astype(np.float32)
        return feats, patch_labels(data_manager.label_map(record), grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(job, records))
    else:
        results = [job(record) for record in records]
    return FeatureSet([r.sample_id for r in records], [r[0] for r in results], [r[1] for r in results])


def save_features(features: FeatureSet, path: str, source: str) -> str:
    return save_checkpoint(path, features.to_checkpoint(source))


def load_features(path: str) -> FeatureSet:
    return FeatureSet.from_checkpoint(load_checkpoint(path))


class ProbeHead(Module):
    """표준화 + 선형 분류기 (D → 클래스 수)"""

    def __init__(self, dim: int, num_classes: int, rng: np.random.Generator,
                 mean: Optional[np.ndarray] = None, std: Optional[np.ndarray] = None):
        super().__init__()
        self.num_classes = num_classes
        self.linear = self.add_module('linear', Linear(dim, num_classes, rng))
        self.mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = np.ones(dim) if std is None else np.asarray(std, dtype=np.float64)
        self.final_loss: Optional[float] = None

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def forward(self, features):
        return self.linear(self.standardize(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        with precision(np.float64):
            return self(features).data.argmax(axis=1)


def probe_loss(head: ProbeHead, inputs: np.ndarray, labels: np.ndarray, l2: float):
    """CE + (l2/2)·‖W‖²"""
    weight = head.linear.weight
    penalty = F.scale(F.sum(F.mul(weight, weight)), 0.5 * l2)
    return F.add(F.cross_entropy_labels(head.linear(inputs), labels), penalty)


def train_probe(features: np.ndarray, labels: np.ndarray, config: ProbeConfig,
                seed: Optional[int] = None) -> ProbeHead:
    """전체 배치 경사하강, 시드별 결정적"""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ShapeError(f"train_probe: 모양 불일치 {features.shape} / {labels.shape}")
    if labels.min() < 0 or labels.max() >= config.num_classes:
        raise ValueError(f"라벨은 [0, {config.num_classes}) 범위여야 합니다")

    std = features.std(axis=0)
    with precision(np.float64):
        head = ProbeHead(features.shape[1], config.num_classes,
                         make_rng(config.seed if seed is None else seed),
                         mean=features.mean(axis=0), std=np.where(std > 0, std, 1.0))
        inputs = head.standardize(features)
        optimizer = SGD(head.parameters(), lr=config.lr)
        for _ in range(config.iterations):
            with Tape() as tape:
                loss = probe_loss(head, inputs, labels, config.l2)
            optimizer.step(backward(loss, tape))
        head.final_loss = float(probe_loss(head, inputs, labels, config.l2).data)
    return head


@dataclass
class ProbeReport:
    """클래스별 IoU, mIoU, 정확도"""
    per_class_iou: List[Optional[float]]
    miou: float
    pixel_accuracy: float
    mean_accuracy: float
    seeds: List[int] = field(default_factory=list)
    checkpoint: str = ""
    num_patches: int = 0

    def to_dict(self) -> Dict:
        return asdict(self)


def miou_from_predictions(predictions: np.ndarray, labels: np.ndarray, num_classes: int) -> ProbeReport:
    """IoU = TP/(TP+FP+FN), 예측과 정답 모두에 없는 클래스는 평균에서 제외"""
    predictions = np.asarray(predictions, dtype=np.int64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if predictions.shape != labels.shape or len(labels) == 0:
        raise ShapeError(f"예측 {predictions.shape} / 정답 {labels.shape} 모양 불일치")

    matrix = confusion_matrix(labels, predictions, labels=np.arange(num_classes))
    tp = np.diag(matrix).astype(np.float64)
    support = matrix.sum(axis=1)
    union = support + matrix.sum(axis=0) - tp
    present = union > 0
    iou = np.divide(tp, union, out=np.zeros_like(tp), where=present)
    has_gt = support > 0
    class_acc = np.divide(tp, support, out=np.zeros_like(tp), where=has_gt)

    return ProbeReport(
        per_class_iou=[float(v) if p else None for v, p in zip(iou, present)],
        miou=float(iou[present].mean()),
        pixel_accuracy=float(tp.sum() / len(labels)),
        mean_accuracy=float(class_acc[has_gt].mean()),
        num_patches=len(labels),
    )


def evaluate_miou(head: ProbeHead, features: np.ndarray, labels: np.ndarray) -> ProbeReport:
    return miou_from_predictions(head.predict(features), labels, head.num_classes)


@dataclass
class ProbeSummary:
    """사전학습 백본과 무작위 초기화 백본의 시드별 결과"""
    checkpoint: str
    pretrained: List[ProbeReport]
    baseline: List[ProbeReport]

    @property
    def margins(self) -> List[float]:
        return [p.miou - b.miou for p, b in zip(self.pretrained, self.baseline)]

    def to_dict(self) -> Dict:
        return {
            'checkpoint': self.checkpoint,
            'pretrained': [r.to_dict() for r in self.pretrained],
            'baseline': [r.to_dict() for r in self.baseline],
            'mean_miou': float(np.mean([r.miou for r in self.pretrained])),
            'baseline_mean_miou': float(np.mean([r.miou for r in self.baseline])),
            'margins': self.margins,
        }


def probe_backbone(backbone: ViTBackbone, data_manager: DataManager, grid: PatchGrid,
                   config: ProbeConfig, seed: int, source: str, threads: int = 1,
                   feature_dir: Optional[str] = None) -> ProbeReport:
    """train 분할로 학습, test 분할로 평가"""
    train_set = extract_features(backbone, data_manager, grid, 'train', threads)
    test_set = extract_features(backbone, data_manager, grid, 'test', threads)
    if feature_dir:
        save_features(train_set, os.path.join(feature_dir, "features_train.eckp"), source)
        save_features(test_set, os.path.join(feature_dir, "features_test.eckp"), source)

    head = train_probe(*train_set.stacked(), config, seed=seed)
    report = evaluate_miou(head, *test_set.stacked())
    report.seeds = [seed]
    report.checkpoint = source
    return report


def run_probe(checkpoint_path: str, settings: Settings, data_manager: Optional[DataManager] = None,
              output_dir: Optional[str] = None, threads: int = 1,
              seeds: Optional[Sequence[int]] = None) -> ProbeSummary:
    """특징 추출 → 프로브 학습 → 평가, 무작위 초기화 기준선 포함"""
    config = settings.probe
    output_dir = output_dir or config.output_dir
    seeds = list(config.seeds if seeds is None else seeds)
    model_config, backbone = load_backbone(checkpoint_path)
    data_manager = data_manager or DataManager(settings.train.manifest, model_config.in_channels)
    grid = PatchGrid(model_config.patch_size, model_config.image_size, model_config.image_size)
    source = checkpoint_id(checkpoint_path)

    logger.info(f"🔬 선형 프로브 시작: {source}, 시드 {seeds}")
    pretrained, baseline = [], []
    for position, seed in enumerate(seeds):
        feature_dir = output_dir if position == 0 else None
        report = probe_backbone(backbone, data_manager, grid, config, seed, source, threads, feature_dir)
        reference = probe_backbone(random_backbone(model_config, seed), data_manager, grid, config,
                                   seed, checkpoint_id(None), threads)
        logger.info(f"seed {seed}: mIoU {format_percentage(report.miou)} "
                    f"(무작위 초기화 {format_percentage(reference.miou)})")
        pretrained.append(report)
        baseline.append(reference)

    summary = ProbeSummary(source, pretrained, baseline)
    path = data_manager.save_to_file(summary.to_dict(), "probe_report.json", output_dir)
    logger.info(f"✅ 프로브 보고서 저장: {path}")
    return summary
