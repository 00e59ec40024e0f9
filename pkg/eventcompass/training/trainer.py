"""
자기지도 사전학습 트레이너

한 스텝:
    1. 샘플별 시드로 (x⁺, x★) 증강 쌍과 마스크 생성 (스레드 병렬 가능)
    2. teacher 가 x★ (L_patch) 와 x⁺ (L_context, L_image) 를 테이프 없이 순전파
    3. student 가 masked x★ 를 한 번 순전파, 세 손실이 공유
    4. L_total 역전파 → AdamW → teacher EMA → center 갱신
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..augmentation.patches import MaskVector, PatchGrid, sample_mask
from ..augmentation.pipeline import AugmentedPair, build_augmented_pair
from ..config.settings import Settings
from ..core.data_manager import DataManager
from ..core.exceptions import DataError, DegenerateAugmentationError, NonFiniteError
from ..core.models import EventImage
from ..engine import functional as F
from ..engine.optim import AdamW
from ..engine.tensor import GradientTable, Tape, Tensor, backward, precision
from ..network.pair import HEAD_ROLES, StudentTeacherPair
from ..utils.formatters import format_loss
from ..utils.logger import get_logger
from ..utils.seeding import draw_seeds, make_rng, restore_rng, rng_state
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .losses import LossReport, loss_context, loss_image, loss_patch
from .schedules import learning_rate_at, momentum_at

logger = get_logger(__name__)

METRICS_COLUMNS = ['step', 'L_patch', 'L_context', 'L_image', 'L_total', 'teacher_entropy', 'lr', 'momentum']
METRICS_NAME = "metrics.csv"


@dataclass
class SampleView:
    """한 샘플의 증강 쌍과 마스크"""
    pair: AugmentedPair
    mask: MaskVector


@dataclass
class SampleOutput:
    """한 샘플의 손실 항과 teacher 로짓 (centering 용)"""
    l_patch: Tensor
    l_context: Optional[Tensor]
    l_image: Optional[Tensor]
    total: Tensor
    masked: int
    contexts_used: int
    teacher_logits: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class TrainResult:
    """train_loop 결과"""
    trainer: "Trainer"
    checkpoint_path: Optional[str]
    metrics_path: Optional[str]
    reports: List[LossReport]


class Trainer:
    """student / teacher 쌍과 옵티마이저, RNG 를 소유하는 트레이너"""

    def __init__(self, settings: Settings, data_manager: Optional[DataManager] = None,
                 images: Optional[Sequence[EventImage]] = None, output_dir: Optional[str] = None):
        self.settings = settings
        self.config = settings.train
        self.output_dir = output_dir
        self.grid = PatchGrid(settings.model.patch_size, settings.model.image_size, settings.model.image_size)

        self.data_manager = data_manager
        if images is not None:
            self.images = list(images)
            self.records = None
        else:
            if data_manager is None:
                data_manager = DataManager(self.config.manifest, settings.dataset.num_bins)
                self.data_manager = data_manager
            self.records = data_manager.samples('train')
            self.images = None
        if not (self.images or self.records):
            raise DataError("학습 샘플이 없습니다")

        with precision(self.config.precision):
            self.pair = StudentTeacherPair(settings.model, make_rng(self.config.seed, 1))
        self.optimizer = AdamW(self.pair.student.parameters(), lr=self.config.lr,
                               betas=tuple(self.config.betas), weight_decay=self.config.weight_decay)
        self.rng = make_rng(self.config.seed)
        self.step = 0

    # ------------------------------------------------------------ 데이터

    @property
    def num_samples(self) -> int:
        return len(self.images) if self.images is not None else len(self.records)

    def image(self, index: int) -> EventImage:
        if self.images is not None:
            return self.images[index]
        return self.data_manager.event_image(self.records[index])

    def next_batch(self) -> List[int]:
        """트레이너 RNG 로 배치 인덱스 추출"""
        size = self.config.batch_size
        indices = self.rng.choice(self.num_samples, size=size, replace=self.num_samples < size)
        return [int(i) for i in indices]

    def augment(self, image: EventImage, rng: np.random.Generator) -> SampleView:
        pair = build_augmented_pair(image, rng, self.settings.augment, self.grid)
        mask = sample_mask(rng, self.grid.num_patches, ratio_range=tuple(self.settings.augment.mask_ratio_range))
        return SampleView(pair, mask)

    def _prepare(self, images: Sequence[EventImage], rngs: Sequence[np.random.Generator]) -> List[SampleView]:
        jobs = list(zip(images, rngs))
        if self.config.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
                return list(executor.map(lambda job: self.augment(*job), jobs))
        return [self.augment(image, rng) for image, rng in jobs]

    # ------------------------------------------------------------ 순전파

    def _centers(self) -> Dict[str, Optional[np.ndarray]]:
        if not self.config.centering:
            return {role: None for role in HEAD_ROLES}
        return dict(self.pair.centers)

    def forward_sample(self, view: SampleView, rng: np.random.Generator) -> SampleOutput:
        """한 샘플의 세 손실 (활성 테이프가 있으면 student 쪽만 기록)"""
        cfg = self.config
        student, teacher = self.pair.student, self.pair.teacher
        centers = self._centers()

        patches_star = self.grid.patchify(view.pair.x_star.values)
        patches_plus = self.grid.patchify(view.pair.x_plus.values)

        t_star = teacher.backbone.encode(patches_star)
        t_patch = teacher.patch_head(t_star).data
        z_plus = teacher.backbone.encode(patches_plus).data

        z_star = student.backbone.encode(patches_star, view.mask)
        s_patch = student.patch_head(z_star)

        l_patch = loss_patch(t_patch, s_patch, view.mask, cfg.teacher_temp, cfg.student_temp, centers['patch'])
        total = l_patch
        teacher_logits = {'patch': t_patch}

        l_context, contexts_used = None, 0
        if cfg.lambda_context > 0:
            l_context, info = loss_context(
                z_star, z_plus, view.pair.correspondence, student, teacher,
                cfg.num_contexts, cfg.kmeans_iters, rng, cfg.teacher_temp, cfg.student_temp,
                centers['context'], cfg.kmeans_restarts)
            contexts_used = len(info.used)
            teacher_logits['context'] = info.teacher_logits
            total = F.add(total, F.scale(l_context, cfg.lambda_context))

        l_image = None
        if cfg.lambda_image > 0:
            l_image, t_image = loss_image(z_star, z_plus, student, teacher,
                                          cfg.teacher_temp, cfg.student_temp, centers['image'])
            teacher_logits['image'] = t_image
            total = F.add(total, F.scale(l_image, cfg.lambda_image))

        return SampleOutput(l_patch, l_context, l_image, total, view.mask.count, contexts_used, teacher_logits)

    def _forward_with_retries(self, index: int, image: EventImage, view: SampleView,
                              rng: np.random.Generator) -> SampleOutput:
        """퇴화 증강은 새 변환으로 재시도, 비유한 값은 실제 사용한 증강으로 진단 기록"""
        retries = self.settings.augment.max_retries
        for attempt in range(retries + 1):
            try:
                return self.forward_sample(view, rng)
            except DegenerateAugmentationError as exc:
                if attempt == retries:
                    raise DegenerateAugmentationError(
                        f"{exc} (step={self.step}, sample={index}, 재시도 {retries}회 소진)") from exc
                logger.warning(f"퇴화 증강, 새 변환으로 재시도 ({attempt + 1}/{retries}): sample={index}")
                view = self.augment(image, rng)
            except NonFiniteError as exc:
                path = self._write_diagnostic(index, view, exc)
                if path:
                    logger.error(f"비유한 값 진단 기록: {path}")
                raise NonFiniteError(str(exc), step=self.step, sample_index=index) from exc
        raise AssertionError("unreachable")

    def _write_diagnostic(self, index: int, view: SampleView, error: Exception) -> Optional[str]:
        if not self.output_dir:
            return None
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, f"diagnostic_step{self.step}.json")
        payload = {
            'step': self.step,
            'sample_index': index,
            'error': str(error),
            'augmentation': view.pair.to_dict(),
            'masked_patches': view.mask.count,
        }
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, ensure_ascii=False)
        return path

    # ------------------------------------------------------------ 학습 스텝

    def train_step(self, batch: Optional[Sequence[int]] = None) -> LossReport:
        """배치 한 번 학습 → LossReport"""
        cfg = self.config
        batch = self.next_batch() if batch is None else list(batch)
        rngs = [np.random.default_rng(seed) for seed in draw_seeds(self.rng, len(batch))]
        images = [self.image(index) for index in batch]
        lr = learning_rate_at(self.step, cfg.steps, cfg.lr, cfg.min_lr, cfg.warmup_fraction)
        momentum = momentum_at(self.step, cfg.steps, cfg.momentum_start, cfg.momentum_end)
        step_centers = self._centers()

        with precision(cfg.precision):
            views = self._prepare(images, rngs)
            outputs: List[SampleOutput] = []
            with Tape() as tape:
                for index, image, view, rng in zip(batch, images, views, rngs):
                    outputs.append(self._forward_with_retries(index, image, view, rng))

                total = outputs[0].total
                for output in outputs[1:]:
                    total = F.add(total, output.total)
                total = F.scale(total, 1.0 / len(outputs))

            grads = backward(total, tape)
            self._check_isolation(grads)
            self.optimizer.step(grads, lr=lr)
            self.pair.ema_update(momentum)
            if cfg.centering:
                for role in HEAD_ROLES:
                    logits = [o.teacher_logits[role] for o in outputs if role in o.teacher_logits]
                    if logits:
                        self.pair.update_center(role, np.concatenate(logits, axis=0), cfg.center_rate)

        entropies = np.concatenate([
            F.entropy(F.teacher_distribution(o.teacher_logits['patch'], cfg.teacher_temp, step_centers['patch']))
            for o in outputs
        ])
        report = LossReport(
            step=self.step,
            l_patch=float(np.mean([float(o.l_patch.data) for o in outputs])),
            l_context=float(np.mean([float(o.l_context.data) if o.l_context is not None else 0.0 for o in outputs])),
            l_image=float(np.mean([float(o.l_image.data) if o.l_image is not None else 0.0 for o in outputs])),
            l_total=float(total.data),
            masked_patches=int(sum(o.masked for o in outputs)),
            contexts_used=float(np.mean([o.contexts_used for o in outputs])),
            teacher_entropy=float(entropies.mean()),
            teacher_entropy_min=float(entropies.min()),
            teacher_entropy_max=float(entropies.max()),
            lr=lr,
            momentum=momentum,
        )
        self.step += 1
        return report

    def _check_isolation(self, grads: GradientTable):
        teacher = self.pair.teacher_leaves()
        leaked = [leaf for leaf in grads.leaves() if id(leaf) in teacher]
        if leaked:
            raise AssertionError(f"teacher 파라미터 {len(leaked)}개가 그래디언트 테이블에 있습니다")

    # ------------------------------------------------------------ 체크포인트

    def to_checkpoint(self) -> Checkpoint:
        tensors = dict(self.pair.named_tensors())
        for name, value in self.optimizer.state_dict().items():
            tensors[f"optim/{name}"] = value
        return Checkpoint(config=self.settings.to_dict(), step=self.step,
                          tensors=tensors, rng_state=rng_state(self.rng))

    def restore(self, checkpoint: Checkpoint):
        """체크포인트 상태로 복원 (이어서 학습)"""
        self.pair.load_tensors(checkpoint.tensors)
        prefix = "optim/"
        self.optimizer.load_state_dict({k[len(prefix):]: v for k, v in checkpoint.tensors.items()
                                        if k.startswith(prefix)})
        self.rng = restore_rng(checkpoint.rng_state)
        self.step = checkpoint.step

    def save(self, path: str) -> str:
        return save_checkpoint(path, self.to_checkpoint())

    @classmethod
    def from_checkpoint(cls, path: str, data_manager: Optional[DataManager] = None,
                        images: Optional[Sequence[EventImage]] = None,
                        output_dir: Optional[str] = None) -> "Trainer":
        checkpoint = load_checkpoint(path)
        trainer = cls(Settings.from_dict(checkpoint.config), data_manager, images, output_dir)
        trainer.restore(checkpoint)
        return trainer


def append_metrics(path: str, report: LossReport):
    """metrics.csv 에 한 행 추가 (파일이 없으면 헤더 포함)"""
    frame = pd.DataFrame([report.to_row()], columns=METRICS_COLUMNS)
    frame.to_csv(path, mode='a', header=not os.path.exists(path), index=False)


def entropy_in_band(entropy: float, out_dim: int) -> bool:
    """collapse 감시 구간 (0.05·ln d, ln d)"""
    upper = math.log(out_dim)
    return 0.05 * upper < entropy < upper


def train_loop(settings: Settings, output_dir: Optional[str] = None, resume: Optional[str] = None,
               data_manager: Optional[DataManager] = None,
               images: Optional[Sequence[EventImage]] = None) -> TrainResult:
    """train.steps 까지 학습, 주기적 체크포인트와 metrics.csv 기록"""
    cfg = settings.train
    output_dir = output_dir or cfg.output_dir
    os.makedirs(output_dir, exist_ok=True)

    if resume:
        trainer = Trainer.from_checkpoint(resume, data_manager, images, output_dir)
        logger.info(f"체크포인트에서 재개: {resume} (step {trainer.step})")
    else:
        trainer = Trainer(settings, data_manager, images, output_dir)

    metrics_path = os.path.join(output_dir, METRICS_NAME)
    total_steps = trainer.config.steps
    out_dim = settings.model.out_dim
    reports: List[LossReport] = []
    logger.info(f"🧠 사전학습 시작: step {trainer.step} → {total_steps}, "
                f"배치 {trainer.config.batch_size}, 샘플 {trainer.num_samples}개")

    while trainer.step < total_steps:
        report = trainer.train_step()
        reports.append(report)
        append_metrics(metrics_path, report)

        if not entropy_in_band(report.teacher_entropy, out_dim):
            logger.warning(f"teacher 엔트로피가 collapse 구간을 벗어났습니다: "
                           f"{report.teacher_entropy:.4f} (ln d = {math.log(out_dim):.4f})")
        if report.step % max(1, trainer.config.log_every) == 0 or trainer.step == total_steps:
            logger.info(
                f"step {report.step:>5} | L_total {format_loss(report.l_total)} | "
                f"patch {format_loss(report.l_patch)} | ctx {format_loss(report.l_context)} | "
                f"img {format_loss(report.l_image)} | lr {report.lr:.2e} | m {report.momentum:.5f} | "
                f"H_t {report.teacher_entropy:.3f}")

        every = trainer.config.checkpoint_every
        if every > 0 and trainer.step % every == 0 and trainer.step < total_steps:
            trainer.save(os.path.join(output_dir, f"checkpoint_step{trainer.step}.eckp"))

    checkpoint_path = trainer.save(os.path.join(output_dir, "checkpoint_final.eckp"))
    logger.info(f"✅ 사전학습 완료: {checkpoint_path}")
    return TrainResult(trainer, checkpoint_path, metrics_path if reports else None, reports)


@dataclass
class SweepRun:
    """스윕 한 지점"""
    key: str
    value: object
    output_dir: str
    result: TrainResult


def run_sweep(settings: Settings, key: str, values: Sequence, output_dir: str,
              data_manager: Optional[DataManager] = None,
              images: Optional[Sequence[EventImage]] = None) -> List[SweepRun]:
    """설정 키 하나를 바꿔 가며 사전학습"""
    runs = []
    for value in values:
        variant = Settings.from_dict(settings.to_dict())
        variant.config_path = settings.config_path
        variant.set_value(key, value)
        variant.validate()
        run_dir = os.path.join(output_dir, f"{key.split('.')[-1]}_{value}")
        logger.info(f"스윕 {key}={value} → {run_dir}")
        variant.save_run_header(run_dir, argv=[])
        runs.append(SweepRun(key, value, run_dir, train_loop(variant, run_dir, data_manager=data_manager,
                                                              images=images)))
    return runs
