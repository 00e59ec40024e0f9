"""
사전학습 데이터셋 생성 (E-TartanAir 대용 desk-scale 데이터셋)
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from typing import List, Optional, Sequence

import numpy as np

from ..config.settings import DatasetConfig, SimConfig
from ..core.data_manager import save_manifest
from ..core.event_io import write_events
from ..core.exceptions import DatasetError
from ..core.models import DatasetManifest, EventStream, SampleRecord
from ..utils.logger import get_logger
from ..utils.seeding import derive_seed
from .emulator import simulate_from_frames
from .models import CameraTrajectory
from .scenes import render_trajectory

logger = get_logger(__name__)

SIMULATOR_VERSION = "eventcompass-sim/1"
MANIFEST_NAME = "manifest.json"


def warp_and_simulate(image: np.ndarray, trajectory: CameraTrajectory, config: SimConfig) -> EventStream:
    """정지 이미지를 궤적대로 렌더링한 뒤 이벤트 시뮬레이션"""
    frames = render_trajectory(np.asarray(image, dtype=np.float64), trajectory)
    return simulate_from_frames(frames, trajectory.timestamps, config)


def split_for_index(index: int, total: int, holdout_fraction: float) -> str:
    """마지막 holdout_fraction 비율을 test 로"""
    num_test = int(np.floor(holdout_fraction * total + 0.5))
    return "test" if index >= total - num_test else "train"


def _simulate_sample(index: int, source, seed: int, sim_config: SimConfig,
                     dataset_config: DatasetConfig):
    sample_seed = derive_seed(seed, index)
    rng = np.random.default_rng(sample_seed)
    scene = source.generate(rng, dataset_config)
    stream = simulate_from_frames(scene.frames, scene.timestamps, replace(sim_config, seed=sample_seed))
    return scene, stream


def pack_dataset(sources: Sequence, out_dir: str, config: SimConfig,
                 dataset_config: Optional[DatasetConfig] = None, seed: Optional[int] = None,
                 threads: int = 1) -> DatasetManifest:
    """소스별 이벤트 파일 + 라벨 맵 + 매니페스트 기록

    샘플 시드는 derive_seed(seed, index) 로 유도하므로 스레드 수와 무관하게
    같은 시드면 바이트 단위로 같은 파일이 나온다.
    """
    if not sources:
        raise DatasetError("소스가 비어 있습니다")
    dataset_config = dataset_config or DatasetConfig()
    seed = config.seed if seed is None else seed

    os.makedirs(os.path.join(out_dir, "events"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "labels"), exist_ok=True)

    def job(index: int):
        return _simulate_sample(index, sources[index], seed, config, dataset_config)

    logger.info(f"🎞️ 데이터셋 생성 시작: {len(sources)}개 샘플 → {out_dir}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(job, range(len(sources))))
    else:
        results = [job(index) for index in range(len(sources))]

    records: List[SampleRecord] = []
    for index, (scene, stream) in enumerate(results):
        sample_id = f"sample_{index:05d}"
        event_path = os.path.join("events", f"{sample_id}.evs")
        write_events(os.path.join(out_dir, event_path), stream)

        label_path = None
        if scene.label_map is not None:
            label_path = os.path.join("labels", f"{sample_id}.npy")
            np.save(os.path.join(out_dir, label_path), np.asarray(scene.label_map, dtype=np.uint8))

        if len(stream) == 0:
            logger.warning(f"이벤트가 없는 샘플: {sample_id}")

        records.append(SampleRecord(
            sample_id=sample_id,
            event_path=event_path,
            width=stream.width,
            height=stream.height,
            duration=int(scene.timestamps[-1] - scene.timestamps[0]),
            source=scene.source,
            label_path=label_path,
            split=split_for_index(index, len(sources), dataset_config.holdout_fraction),
        ))

    manifest = DatasetManifest(
        root=out_dir,
        samples=records,
        seed=int(seed),
        simulator_version=SIMULATOR_VERSION,
        config={'simulation': asdict(config), 'dataset': {
            k: list(v) if isinstance(v, tuple) else v for k, v in asdict(dataset_config).items()}},
    )
    save_manifest(manifest, os.path.join(out_dir, MANIFEST_NAME))
    logger.info(f"✅ 데이터셋 생성 완료: {len(records)}개 샘플")
    return manifest
