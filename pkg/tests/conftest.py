"""
공용 픽스처: 작은 설정, 무작위 이벤트 이미지, 작은 moving-shapes 데이터셋
"""

import os

import numpy as np
import pytest

from eventcompass.config.settings import Settings
from eventcompass.core.models import EventImage
from eventcompass.simulation.dataset import MANIFEST_NAME, pack_dataset
from eventcompass.simulation.scenes import build_sources

TINY_OVERRIDES = {
    'dataset.width': 16,
    'dataset.height': 16,
    'dataset.num_bins': 3,
    'dataset.num_samples': 8,
    'dataset.duration_us': 10_000,
    'dataset.num_frames': 4,
    'dataset.trajectory_amplitude': 2.0,
    'model.image_size': 16,
    'model.patch_size': 4,
    'model.in_channels': 3,
    'model.embed_dim': 16,
    'model.depth': 1,
    'model.num_heads': 2,
    'model.head_hidden_dim': 16,
    'model.head_bottleneck_dim': 8,
    'model.out_dim': 16,
    'train.batch_size': 2,
    'train.steps': 3,
    'train.num_contexts': 2,
    'train.kmeans_iters': 5,
    'train.precision': 'float64',
    'train.checkpoint_every': 0,
    'train.log_every': 1,
    'probe.iterations': 40,
    'probe.seeds': [0],
}


def make_settings(**overrides) -> Settings:
    """작은 모델 / 데이터 설정 (키는 section__name 형태로 덮어쓰기)"""
    settings = Settings()
    for key, value in TINY_OVERRIDES.items():
        settings.set_value(key, value)
    for key, value in overrides.items():
        settings.set_value(key.replace('__', '.'), value)
    return settings.validate()


def random_images(count: int, channels: int = 3, size: int = 16, seed: int = 0):
    """희소한 무작위 이벤트 이미지"""
    rng = np.random.default_rng(seed)
    images = []
    for _ in range(count):
        values = rng.normal(size=(channels, size, size))
        values[rng.random(values.shape) < 0.5] = 0.0
        images.append(EventImage(values))
    return images


@pytest.fixture
def tiny_settings() -> Settings:
    return make_settings()


@pytest.fixture
def toy_images():
    return random_images(4)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> str:
    """moving-shapes 8개 샘플 데이터셋의 매니페스트 경로"""
    settings = make_settings()
    out_dir = str(tmp_path_factory.mktemp("moving_shapes"))
    pack_dataset(build_sources(settings.dataset), out_dir, settings.simulation, settings.dataset, seed=3)
    return os.path.join(out_dir, MANIFEST_NAME)
