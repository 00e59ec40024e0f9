"""
이벤트 시뮬레이터 / 궤적 / 데이터셋 생성 테스트
"""

import os
from dataclasses import replace

import numpy as np
import pytest

from eventcompass.config.settings import DatasetConfig, SimConfig
from eventcompass.core.data_manager import DataManager, load_manifest
from eventcompass.core.event_io import encode_events, read_events
from eventcompass.core.exceptions import ConfigError, DataError
from eventcompass.simulation.dataset import SIMULATOR_VERSION, pack_dataset, split_for_index, warp_and_simulate
from eventcompass.simulation.emulator import simulate_from_frames
from eventcompass.simulation.scenes import MovingShapesSource, build_sources, random_moving_shapes
from eventcompass.simulation.models import ShapeKind
from eventcompass.simulation.trajectory import generate_trajectory
from eventcompass.utils.seeding import derive_seed

EPS = 1e-3


def frames_from_log(levels):
    """log(I + ε) 가 levels 가 되는 프레임"""
    return [np.exp(np.asarray(level, dtype=np.float64)) - EPS for level in levels]


def count_by_pixel(stream, width, height):
    counts = np.zeros(height * width, dtype=np.int64)
    np.add.at(counts, stream.y.astype(np.int64) * width + stream.x.astype(np.int64), 1)
    return counts.reshape(height, width)


@pytest.mark.parametrize("seed", range(25))
def test_two_frame_event_counts_match_threshold_crossings(seed):
    """픽셀별 이벤트 수 = floor(|Δ log I| / C), 부호는 Δ 의 부호"""
    rng = np.random.default_rng(seed)
    first = rng.uniform(0.05, 1.0, size=(5, 6))
    second = rng.uniform(0.05, 1.0, size=(5, 6))
    config = SimConfig(contrast_threshold=0.15, log_eps=EPS)
    stream = simulate_from_frames([first, second], [0, 1000], config)

    delta = np.log(second + EPS) - np.log(first + EPS)
    np.testing.assert_array_equal(count_by_pixel(stream, 6, 5), np.floor(np.abs(delta) / 0.15))
    signs = np.zeros((5, 6), dtype=np.int64)
    np.add.at(signs, (stream.y.astype(np.int64), stream.x.astype(np.int64)), stream.p.astype(np.int64))
    np.testing.assert_array_equal(np.sign(signs), np.sign(delta) * (np.abs(delta) >= 0.15))


def test_static_frames_produce_no_events():
    frame = np.random.default_rng(0).uniform(0.1, 0.9, size=(8, 8))
    stream = simulate_from_frames([frame, frame.copy(), frame.copy()], [0, 500, 1000], SimConfig())
    assert len(stream) == 0


def test_ramp_timestamps_are_interpolated():
    """log 밝기 0 → 1, C = 0.2 이면 20% 간격마다 한 개"""
    frames = frames_from_log([np.zeros((1, 1)), np.ones((1, 1))])
    stream = simulate_from_frames(frames, [0, 1000], SimConfig(contrast_threshold=0.2, log_eps=EPS))
    np.testing.assert_array_equal(stream.t, [200, 400, 600, 800, 1000])
    assert np.all(stream.p == 1)


def test_reference_level_carries_over_frames():
    """0 → 0.3 → 0.5 에서 총 floor(0.5 / 0.2) = 2 개"""
    frames = frames_from_log([np.zeros((1, 1)), np.full((1, 1), 0.3), np.full((1, 1), 0.5)])
    stream = simulate_from_frames(frames, [0, 100, 200], SimConfig(contrast_threshold=0.2, log_eps=EPS))
    assert len(stream) == 2
    assert stream.t[0] <= 100 < stream.t[1]


def test_refractory_period_drops_close_events():
    frames = frames_from_log([np.zeros((1, 1)), np.ones((1, 1))])
    config = SimConfig(contrast_threshold=0.2, log_eps=EPS, refractory_us=300)
    stream = simulate_from_frames(frames, [0, 1000], config)
    np.testing.assert_array_equal(stream.t, [200, 600, 1000])


def test_events_are_time_sorted_with_noise():
    rng = np.random.default_rng(1)
    frames = [rng.uniform(0.05, 1.0, size=(6, 6)) for _ in range(4)]
    config = SimConfig(noise_rate_hz=500.0, seed=11)
    stream = simulate_from_frames(frames, [0, 1000, 2000, 3000], config)
    assert np.all(np.diff(stream.t.astype(np.int64)) >= 0)


def test_same_seed_gives_identical_bytes():
    rng = np.random.default_rng(2)
    frames = [rng.uniform(0.05, 1.0, size=(6, 6)) for _ in range(3)]
    config = SimConfig(noise_rate_hz=800.0, seed=5)
    first = encode_events(simulate_from_frames(frames, [0, 1000, 2000], config))
    second = encode_events(simulate_from_frames(frames, [0, 1000, 2000], config))
    other = encode_events(simulate_from_frames(frames, [0, 1000, 2000], replace(config, seed=6)))
    assert first == second
    assert first != other


def test_simulator_rejects_bad_input():
    frame = np.ones((4, 4))
    with pytest.raises(DataError):
        simulate_from_frames([frame], [0], SimConfig())
    with pytest.raises(DataError):
        simulate_from_frames([frame, frame], [10, 10], SimConfig())
    with pytest.raises(DataError):
        simulate_from_frames([frame, np.ones((4, 5))], [0, 1], SimConfig())
    with pytest.raises(DataError):
        simulate_from_frames([frame, -frame], [0, 1], SimConfig())


# ---------------------------------------------------------------- 궤적

def test_square_trajectory_visits_corners():
    trajectory = generate_trajectory("square", duration=4000, amplitude=3.0, num_poses=5)
    expected = 3.0 * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1], [-1, -1]])
    np.testing.assert_allclose(trajectory.translations(), expected)
    np.testing.assert_array_equal(trajectory.timestamps, [0, 1000, 2000, 3000, 4000])


@pytest.mark.parametrize("pattern, moving_axis", [("horizontal", 0), ("vertical", 1)])
def test_linear_sweeps(pattern, moving_axis):
    trajectory = generate_trajectory(pattern, duration=1000, amplitude=2.0, num_poses=3)
    offsets = trajectory.translations()
    np.testing.assert_allclose(offsets[:, moving_axis], [-2.0, 0.0, 2.0])
    np.testing.assert_allclose(offsets[:, 1 - moving_axis], 0.0)


def test_random_affine_trajectory_is_seeded():
    first = generate_trajectory("random-affine", 1000, 4.0, 6, seed=9, size=(16, 16))
    second = generate_trajectory("random-affine", 1000, 4.0, 6, seed=9, size=(16, 16))
    assert first.to_dict() == second.to_dict()
    assert first.poses[0].is_identity() or np.allclose(first.poses[0].matrix, [[1, 0, 0], [0, 1, 0]])


def test_unknown_trajectory_pattern():
    with pytest.raises(ConfigError):
        generate_trajectory("zigzag", 1000, 1.0, 4)


def test_static_image_translation_creates_events():
    image = np.zeros((16, 16))
    image[4:12, 4:12] = 0.8
    trajectory = generate_trajectory("horizontal", duration=2000, amplitude=2.0, num_poses=5)
    stream = warp_and_simulate(image, trajectory, SimConfig())
    assert len(stream) > 0
    assert stream.width == 16 and stream.height == 16


def test_horizontal_motion_fires_on_vertical_edges():
    """가로 운동: 세로 가장자리 이벤트 수 > 평탄 영역의 5배"""
    ys, xs = np.mgrid[0:32, 0:32].astype(np.float64)
    image = np.zeros((32, 32))
    box = (ys >= 8) & (ys < 24) & (xs >= 8) & (xs < 24)
    # 세로 방향으로만 변하는 줄무늬 텍스처
    image[box] = (0.5 + 0.3 * np.sin(2 * np.pi * ys / 5.0))[box]
    trajectory = generate_trajectory("horizontal", duration=4000, amplitude=2.0, num_poses=9)
    stream = warp_and_simulate(image, trajectory, SimConfig())

    counts = count_by_pixel(stream, 32, 32)
    rows = (ys >= 8) & (ys < 24)
    vertical_edges = rows & ((np.abs(xs - 7.5) <= 3.0) | (np.abs(xs - 23.5) <= 3.0))
    edge_count = counts[vertical_edges].sum()
    assert edge_count > 0
    assert edge_count > 5 * counts[~vertical_edges].sum()


# ---------------------------------------------------------------- 장면 / 데이터셋

def test_moving_shapes_label_map_is_binary():
    config = DatasetConfig(width=16, height=16, num_frames=4, duration_us=10_000, trajectory_amplitude=2.0)
    scene = random_moving_shapes(np.random.default_rng(4), config).to_frames()
    assert len(scene.frames) == 4
    assert scene.label_map.shape == (16, 16)
    assert set(np.unique(scene.label_map)) <= {0, 1}
    assert all(frame.min() >= 0.0 and frame.max() <= 1.0 for frame in scene.frames)


def test_packed_labels_match_analytic_footprint(tmp_path):
    """라벨 = 구간 중간 시각의 도형 영역 (원: 중심 거리 ≤ r, 상자: 반폭 / 반높이 이내)"""
    config = DatasetConfig(width=16, height=16, num_samples=4, num_frames=3, duration_us=6000,
                           trajectory_amplitude=2.0)
    manifest = pack_dataset(build_sources(config), str(tmp_path), SimConfig(), config, seed=13)
    ys, xs = np.mgrid[0:16, 0:16].astype(np.float64)
    mid = config.duration_us / 2.0

    for index, record in enumerate(manifest.samples):
        scene = random_moving_shapes(np.random.default_rng(derive_seed(13, index)), config)
        expected = np.zeros((16, 16), dtype=bool)
        for shape in scene.shapes:
            cx = shape.center[0] + mid * shape.velocity[0]
            cy = shape.center[1] + mid * shape.velocity[1]
            if shape.kind is ShapeKind.DISC:
                expected |= (xs - cx) ** 2 + (ys - cy) ** 2 <= shape.size[0] * shape.size[0]
            else:
                expected |= (np.abs(xs - cx) <= shape.size[0]) & (np.abs(ys - cy) <= shape.size[1])
        labels = np.load(tmp_path / record.label_path)
        np.testing.assert_array_equal(labels, expected.astype(np.uint8))
        assert labels.any()


def test_split_for_index():
    splits = [split_for_index(i, 8, 0.25) for i in range(8)]
    assert splits == ["train"] * 6 + ["test"] * 2


def test_tiny_dataset_manifest(tiny_dataset):
    manifest = load_manifest(tiny_dataset)
    assert len(manifest) == 8
    assert manifest.simulator_version == SIMULATOR_VERSION
    assert len(manifest.split("test")) == 2
    root = os.path.dirname(tiny_dataset)
    for record in manifest.samples:
        stream = read_events(os.path.join(root, record.event_path))
        assert (stream.width, stream.height) == (16, 16)
        labels = np.load(os.path.join(root, record.label_path))
        assert labels.shape == (16, 16)


def test_data_manager_event_images(tiny_dataset):
    manager = DataManager(tiny_dataset, num_bins=3)
    record = manager.samples("train")[0]
    image = manager.event_image(record)
    assert image.values.shape == (3, 16, 16)
    assert manager.event_image(record) is image
    assert manager.label_map(record).shape == (16, 16)
    assert manager.get_data_stats()['test'] == 2


def test_data_manager_saves_json_and_csv(tiny_dataset, tmp_path):
    import json

    import pandas as pd

    manager = DataManager(tiny_dataset, num_bins=3)
    json_path = manager.save_to_file({'b': 1, 'a': [1, 2]}, "report.json", str(tmp_path / "out"))
    assert json.loads(open(json_path, encoding="utf-8").read()) == {'a': [1, 2], 'b': 1}
    csv_path = manager.save_to_file(pd.DataFrame({'step': [0, 1]}), "metrics.csv", str(tmp_path / "out"))
    assert pd.read_csv(csv_path)['step'].tolist() == [0, 1]


def test_pack_dataset_is_deterministic_across_threads(tmp_path):
    config = DatasetConfig(width=16, height=16, num_samples=3, num_frames=3, duration_us=5000,
                           trajectory_amplitude=2.0)
    sim = SimConfig(noise_rate_hz=100.0)
    pack_dataset(build_sources(config), str(tmp_path / "a"), sim, config, seed=21, threads=1)
    pack_dataset(build_sources(config), str(tmp_path / "b"), sim, config, seed=21, threads=3)
    for index in range(3):
        name = f"sample_{index:05d}.evs"
        first = (tmp_path / "a" / "events" / name).read_bytes()
        second = (tmp_path / "b" / "events" / name).read_bytes()
        assert first == second
    assert (tmp_path / "a" / "manifest.json").read_text().replace(str(tmp_path / "a"), "") == \
        (tmp_path / "b" / "manifest.json").read_text().replace(str(tmp_path / "b"), "")


def test_pack_dataset_requires_sources(tmp_path):
    with pytest.raises(DataError):
        pack_dataset([], str(tmp_path), SimConfig())


def test_image_sources_from_folder(tmp_path):
    import matplotlib.pyplot as plt

    folder = tmp_path / "images"
    folder.mkdir()
    image = np.zeros((16, 16, 3))
    image[3:10, 5:12] = 1.0
    plt.imsave(folder / "square.png", image)
    config = DatasetConfig(width=16, height=16, num_samples=2, num_frames=3, duration_us=2000,
                           image_dir=str(folder), trajectory_pattern="square", trajectory_amplitude=2.0)
    sources = build_sources(config)
    assert [s.tag for s in sources] == ["image:square.png"] * 2
    manifest = pack_dataset(sources, str(tmp_path / "out"), SimConfig(), config, seed=0)
    assert all(record.label_path is None for record in manifest.samples)
    assert isinstance(build_sources(DatasetConfig(num_samples=2))[0], MovingShapesSource)


def test_missing_image_folder(tmp_path):
    with pytest.raises(DataError):
        build_sources(DatasetConfig(image_dir=str(tmp_path / "nope")))
