"""
트레이너 / 스케줄 테스트
손실 분해, EMA, 결정성, 재시도, 진단 파일, metrics.csv
"""

import json
import math

import numpy as np
import pandas as pd
import pytest

from eventcompass.core.data_manager import DataManager
from eventcompass.core.exceptions import DegenerateAugmentationError, NonFiniteError
from eventcompass.engine.tensor import GradientTable
from eventcompass.training.schedules import learning_rate_at, momentum_at, warmup_steps
from eventcompass.training.trainer import (
    METRICS_COLUMNS, Trainer, entropy_in_band, run_sweep, train_loop
)

from conftest import make_settings, random_images


def student_state(trainer):
    return {name: t.data.copy() for name, t in trainer.pair.student.named_parameters()}


def teacher_state(trainer):
    return {name: t.data.copy() for name, t in trainer.pair.teacher.named_parameters()}


# ---------------------------------------------------------------- 스케줄

def test_learning_rate_warmup_and_cosine():
    assert warmup_steps(100, 0.1) == 10
    assert learning_rate_at(0, 100, 1.0, 0.0, 0.1) == pytest.approx(0.1)
    assert learning_rate_at(9, 100, 1.0, 0.0, 0.1) == pytest.approx(1.0)
    assert learning_rate_at(10, 100, 1.0, 0.0, 0.1) == pytest.approx(1.0)
    assert learning_rate_at(55, 100, 1.0, 0.0, 0.1) == pytest.approx(0.5)
    assert learning_rate_at(100, 100, 1.0, 0.01, 0.1) == pytest.approx(0.01)


def test_learning_rate_without_warmup():
    assert learning_rate_at(0, 10, 2.0, 0.0, 0.0) == pytest.approx(2.0)
    assert learning_rate_at(0, 0, 2.0) == 2.0


def test_momentum_schedule_endpoints():
    assert momentum_at(0, 100) == pytest.approx(0.996)
    assert momentum_at(50, 100) == pytest.approx(0.998)
    assert momentum_at(100, 100) == pytest.approx(1.0)
    values = [momentum_at(step, 20) for step in range(21)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_entropy_band():
    assert entropy_in_band(0.5 * math.log(16), 16)
    assert not entropy_in_band(math.log(16), 16)
    assert not entropy_in_band(0.01, 16)


# ---------------------------------------------------------------- 학습 스텝

def test_total_loss_decomposes():
    trainer = Trainer(make_settings(), images=random_images(4))
    report = trainer.train_step()
    cfg = trainer.config
    expected = report.l_patch + cfg.lambda_context * report.l_context + cfg.lambda_image * report.l_image
    assert report.l_total == pytest.approx(expected, rel=1e-10)
    assert report.contexts_used >= 1
    assert np.isfinite(report.teacher_entropy)
    assert trainer.step == 1


def test_zero_weights_reduce_to_patch_loss():
    settings = make_settings(train__lambda_context=0.0, train__lambda_image=0.0)
    trainer = Trainer(settings, images=random_images(4))
    report = trainer.train_step()
    assert report.l_context == 0.0 and report.l_image == 0.0
    assert report.l_total == pytest.approx(report.l_patch, rel=1e-12)


def test_teacher_follows_exact_ema_after_step():
    trainer = Trainer(make_settings(), images=random_images(4))
    old_teacher = teacher_state(trainer)
    report = trainer.train_step()
    new_student = student_state(trainer)
    m = report.momentum
    assert m == pytest.approx(0.996)
    for name, values in teacher_state(trainer).items():
        np.testing.assert_array_equal(values, m * old_teacher[name] + (1.0 - m) * new_student[name])


def test_student_moves_and_centers_update():
    trainer = Trainer(make_settings(), images=random_images(4))
    before = student_state(trainer)
    trainer.train_step()
    after = student_state(trainer)
    assert any(not np.array_equal(before[name], after[name]) for name in before)
    for role in ('patch', 'context', 'image'):
        assert np.any(trainer.pair.centers[role] != 0.0)


def test_centering_off_keeps_centers_zero():
    trainer = Trainer(make_settings(train__centering=False), images=random_images(4))
    trainer.train_step()
    assert all(np.all(center == 0.0) for center in trainer.pair.centers.values())


def test_isolation_check_rejects_teacher_gradients():
    trainer = Trainer(make_settings(), images=random_images(4))
    table = GradientTable()
    leaf = next(iter(trainer.pair.teacher_leaves().values()))
    table.set(leaf, np.zeros_like(leaf.data))
    with pytest.raises(AssertionError):
        trainer._check_isolation(table)


def test_training_is_deterministic():
    first = Trainer(make_settings(), images=random_images(4))
    second = Trainer(make_settings(), images=random_images(4))
    reports = [(first.train_step(), second.train_step()) for _ in range(2)]
    for a, b in reports:
        assert a.to_dict() == b.to_dict()
    for name, values in student_state(first).items():
        np.testing.assert_array_equal(values, student_state(second)[name])


def test_threaded_augmentation_matches_serial():
    serial = Trainer(make_settings(train__threads=1), images=random_images(4))
    threaded = Trainer(make_settings(train__threads=2), images=random_images(4))
    assert serial.train_step().to_dict() == threaded.train_step().to_dict()
    for name, values in student_state(serial).items():
        np.testing.assert_array_equal(values, student_state(threaded)[name])


def test_trainer_reads_training_split(tiny_dataset):
    manager = DataManager(tiny_dataset, num_bins=3)
    trainer = Trainer(make_settings(), data_manager=manager)
    assert trainer.num_samples == 6
    report = trainer.train_step()
    assert np.isfinite(report.l_total)


# ---------------------------------------------------------------- 재시도 / 진단

def test_degenerate_augmentation_is_retried(monkeypatch):
    original = Trainer.forward_sample
    calls = []

    def flaky(self, view, rng):
        calls.append(view)
        if len(calls) == 1:
            raise DegenerateAugmentationError("사용 가능한 컨텍스트 없음")
        return original(self, view, rng)

    monkeypatch.setattr(Trainer, "forward_sample", flaky)
    trainer = Trainer(make_settings(), images=random_images(4))
    report = trainer.train_step()
    assert len(calls) == 3
    assert calls[1] is not calls[0]
    assert np.isfinite(report.l_total)


def test_retries_are_bounded(monkeypatch):
    calls = []

    def always_degenerate(self, view, rng):
        calls.append(1)
        raise DegenerateAugmentationError("사용 가능한 컨텍스트 없음")

    monkeypatch.setattr(Trainer, "forward_sample", always_degenerate)
    trainer = Trainer(make_settings(augment__max_retries=2), images=random_images(4))
    with pytest.raises(DegenerateAugmentationError):
        trainer.train_step()
    assert len(calls) == 3


def test_non_finite_loss_writes_diagnostic(monkeypatch, tmp_path):
    def explode(self, view, rng):
        raise NonFiniteError("NaN in loss")

    monkeypatch.setattr(Trainer, "forward_sample", explode)
    trainer = Trainer(make_settings(), images=random_images(4), output_dir=str(tmp_path))
    with pytest.raises(NonFiniteError) as excinfo:
        trainer.train_step(batch=[3, 1])
    assert excinfo.value.step == 0
    assert excinfo.value.sample_index == 3

    diagnostic = json.loads((tmp_path / "diagnostic_step0.json").read_text(encoding="utf-8"))
    assert diagnostic["sample_index"] == 3
    assert len(diagnostic["augmentation"]["transform"]) == 2
    assert diagnostic["masked_patches"] >= 1


def test_diagnostic_records_the_retried_augmentation(monkeypatch, tmp_path):
    """재시도 후 NaN 이면 진단에는 마지막으로 쓴 증강이 기록됨"""
    seen = []

    def degenerate_then_nan(self, view, rng):
        seen.append(view)
        if len(seen) == 1:
            raise DegenerateAugmentationError("사용 가능한 컨텍스트 없음")
        raise NonFiniteError("NaN in loss")

    monkeypatch.setattr(Trainer, "forward_sample", degenerate_then_nan)
    trainer = Trainer(make_settings(), images=random_images(4), output_dir=str(tmp_path))
    with pytest.raises(NonFiniteError) as excinfo:
        trainer.train_step(batch=[2])
    assert excinfo.value.sample_index == 2
    assert len(seen) == 2 and seen[0] is not seen[1]

    diagnostic = json.loads((tmp_path / "diagnostic_step0.json").read_text(encoding="utf-8"))
    expected = json.loads(json.dumps(seen[1].pair.to_dict()))
    assert diagnostic["augmentation"] == expected
    assert diagnostic["augmentation"] != json.loads(json.dumps(seen[0].pair.to_dict()))
    assert diagnostic["masked_patches"] == seen[1].mask.count


# ---------------------------------------------------------------- 학습 루프

def test_train_loop_writes_metrics_and_checkpoint(tmp_path):
    result = train_loop(make_settings(), str(tmp_path), images=random_images(4))
    assert len(result.reports) == 3
    assert (tmp_path / "checkpoint_final.eckp").exists()

    metrics = pd.read_csv(result.metrics_path)
    assert list(metrics.columns) == METRICS_COLUMNS
    assert metrics["step"].tolist() == [0, 1, 2]
    np.testing.assert_allclose(metrics["L_total"], [r.l_total for r in result.reports])


def test_periodic_checkpoints(tmp_path):
    train_loop(make_settings(train__checkpoint_every=1), str(tmp_path), images=random_images(4))
    assert (tmp_path / "checkpoint_step1.eckp").exists()
    assert (tmp_path / "checkpoint_step2.eckp").exists()
    assert not (tmp_path / "checkpoint_step3.eckp").exists()


def test_run_sweep_creates_one_run_per_value(tmp_path):
    runs = run_sweep(make_settings(train__steps=1), "train.lambda_context", [0.0, 0.5], str(tmp_path),
                     images=random_images(4))
    assert [run.value for run in runs] == [0.0, 0.5]
    assert runs[0].result.trainer.config.lambda_context == 0.0
    for run in runs:
        assert (tmp_path / f"lambda_context_{run.value}" / "checkpoint_final.eckp").exists()
        assert (tmp_path / f"lambda_context_{run.value}" / "run_header.json").exists()
