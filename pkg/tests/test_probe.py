"""
선형 프로브 / mIoU 테스트
"""

import json

import numpy as np
import pytest

from eventcompass.augmentation.patches import PatchGrid
from eventcompass.config.settings import ProbeConfig
from eventcompass.core.data_manager import DataManager
from eventcompass.core.exceptions import ShapeError
from eventcompass.evaluation.probe import (
    extract_features, load_backbone, load_features, miou_from_predictions, patch_labels, probe_backbone,
    random_backbone, run_probe, save_features, train_probe
)
from eventcompass.training.trainer import train_loop

from conftest import make_settings


@pytest.fixture(scope="module")
def pretrained_checkpoint(tiny_dataset, tmp_path_factory):
    settings = make_settings(train__steps=1)
    out_dir = str(tmp_path_factory.mktemp("pretrain"))
    return train_loop(settings, out_dir, data_manager=DataManager(tiny_dataset, num_bins=3)).checkpoint_path


# ---------------------------------------------------------------- mIoU

def test_perfect_and_complement_predictions():
    labels = np.array([0, 1, 1, 0, 1])
    perfect = miou_from_predictions(labels, labels, 2)
    assert perfect.miou == 1.0 and perfect.pixel_accuracy == 1.0
    complement = miou_from_predictions(1 - labels, labels, 2)
    assert complement.miou == 0.0 and complement.pixel_accuracy == 0.0


def test_three_class_miou_by_hand():
    labels = np.array([0, 0, 1, 1, 2, 2])
    predictions = np.array([0, 1, 1, 1, 2, 0])
    report = miou_from_predictions(predictions, labels, 3)
    np.testing.assert_allclose(report.per_class_iou, [1 / 3, 2 / 3, 1 / 2])
    assert report.miou == pytest.approx(0.5)
    assert report.pixel_accuracy == pytest.approx(4 / 6)
    assert report.mean_accuracy == pytest.approx(2 / 3)
    assert report.num_patches == 6


def test_miou_is_invariant_to_relabeling():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 3, size=50)
    predictions = np.where(rng.random(50) < 0.7, labels, rng.integers(0, 3, size=50))
    permutation = np.array([2, 0, 1])
    first = miou_from_predictions(predictions, labels, 3)
    second = miou_from_predictions(permutation[predictions], permutation[labels], 3)
    assert first.miou == pytest.approx(second.miou)


def test_absent_class_is_excluded():
    report = miou_from_predictions(np.array([0, 1, 1]), np.array([0, 1, 0]), 3)
    assert report.per_class_iou[2] is None
    assert report.miou == pytest.approx((1 / 2 + 1 / 2) / 2)


def test_miou_shape_mismatch():
    with pytest.raises(ShapeError):
        miou_from_predictions(np.zeros(3), np.zeros(4), 2)


# ---------------------------------------------------------------- 패치 라벨

def test_patch_labels_majority_and_ties():
    grid = PatchGrid(2, 4, 4)
    label_map = np.zeros((4, 4), dtype=np.int64)
    label_map[0, 0:2] = 1          # 패치 0: 2 대 2 동률 → 0
    label_map[0:2, 2:4] = 1
    label_map[1, 3] = 0            # 패치 1: 1 이 3개
    np.testing.assert_array_equal(patch_labels(label_map, grid), [0, 1, 0, 0])
    with pytest.raises(ShapeError):
        patch_labels(np.zeros((4, 5)), grid)


# ---------------------------------------------------------------- 프로브 학습

def test_probe_separates_linear_features():
    rng = np.random.default_rng(1)
    features = np.concatenate([rng.normal(loc=-2.0, size=(60, 4)), rng.normal(loc=2.0, size=(60, 4))])
    labels = np.repeat([0, 1], 60)
    head = train_probe(features, labels, ProbeConfig(iterations=200))
    assert (head.predict(features) == labels).mean() >= 0.99
    assert np.isfinite(head.final_loss)


def test_probe_is_seeded():
    rng = np.random.default_rng(2)
    features, labels = rng.normal(size=(30, 3)), rng.integers(0, 2, size=30)
    config = ProbeConfig(iterations=10)
    first = train_probe(features, labels, config, seed=4).linear.weight.data
    second = train_probe(features, labels, config, seed=4).linear.weight.data
    np.testing.assert_array_equal(first, second)


def test_probe_validates_labels():
    with pytest.raises(ValueError):
        train_probe(np.zeros((3, 2)), np.array([0, 1, 2]), ProbeConfig(num_classes=2))
    with pytest.raises(ShapeError):
        train_probe(np.zeros((3, 2)), np.array([0, 1]), ProbeConfig())


# ---------------------------------------------------------------- 백본 특징

def test_probing_leaves_backbone_unchanged(tiny_dataset, pretrained_checkpoint, tmp_path):
    config, backbone = load_backbone(pretrained_checkpoint)
    before = backbone.state_dict()
    manager = DataManager(tiny_dataset, num_bins=3)
    grid = PatchGrid(config.patch_size, config.image_size, config.image_size)
    report = probe_backbone(backbone, manager, grid, ProbeConfig(iterations=20), 0, "test",
                            feature_dir=str(tmp_path))
    for name, values in backbone.state_dict().items():
        np.testing.assert_array_equal(values, before[name], err_msg=name)
    assert 0.0 <= report.miou <= 1.0
    assert (tmp_path / "features_train.eckp").exists()


def test_feature_extraction_is_repeatable(tiny_dataset, pretrained_checkpoint, tmp_path):
    config, backbone = load_backbone(pretrained_checkpoint)
    manager = DataManager(tiny_dataset, num_bins=3)
    grid = PatchGrid(config.patch_size, config.image_size, config.image_size)
    first = save_features(extract_features(backbone, manager, grid, 'test'), str(tmp_path / "a.eckp"), "x")
    second = save_features(extract_features(backbone, manager, grid, 'test', threads=2),
                           str(tmp_path / "b.eckp"), "x")
    assert (tmp_path / "a.eckp").read_bytes() == (tmp_path / "b.eckp").read_bytes()

    loaded = load_features(first)
    assert len(loaded.sample_ids) == 2
    assert loaded.features[0].shape == (grid.num_patches, config.embed_dim)
    assert set(np.unique(np.concatenate(loaded.labels))) <= {0, 1}
    assert load_features(second).sample_ids == loaded.sample_ids


def test_random_backbone_is_seeded(tiny_settings):
    first = random_backbone(tiny_settings.model, 3).state_dict()
    second = random_backbone(tiny_settings.model, 3).state_dict()
    for name, values in first.items():
        np.testing.assert_array_equal(values, second[name])


def test_run_probe_writes_report(tiny_dataset, pretrained_checkpoint, tmp_path):
    settings = make_settings(probe__iterations=20)
    summary = run_probe(pretrained_checkpoint, settings, DataManager(tiny_dataset, num_bins=3),
                        output_dir=str(tmp_path), seeds=[0])
    assert len(summary.pretrained) == 1 and len(summary.baseline) == 1
    assert summary.baseline[0].checkpoint == "random-init"

    report = json.loads((tmp_path / "probe_report.json").read_text(encoding="utf-8"))
    assert report["checkpoint"] == "checkpoint_final.eckp"
    assert report["pretrained"][0]["seeds"] == [0]
    assert len(report["margins"]) == 1
    assert (tmp_path / "features_test.eckp").exists()
