"""
데이터 관리자 - 매니페스트, 이벤트 이미지, 라벨 맵을 통합 관리
"""

import json
import os
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..utils.logger import get_logger
from .event_io import read_events
from .exceptions import DatasetError
from .models import DatasetManifest, EventImage, SampleRecord
from .representation import stream_to_event_image

logger = get_logger(__name__)


def load_manifest(path: str) -> DatasetManifest:
    """매니페스트 JSON 로드"""
    if not os.path.exists(path):
        raise DatasetError(f"매니페스트를 찾을 수 없습니다: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    try:
        manifest = DatasetManifest.from_dict(data)
    except (KeyError, TypeError) as e:
        raise DatasetError(f"매니페스트 형식 오류: {path}: {e}") from e
    if len(manifest) == 0:
        raise DatasetError(f"샘플이 없는 매니페스트: {path}")
    return manifest


def save_manifest(manifest: DatasetManifest, path: str) -> str:
    """매니페스트 JSON 저장 (키 정렬)"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


class DataManager:
    """중앙 데이터 관리자"""

    def __init__(self, manifest_path: str, num_bins: int = 5):
        self.manifest_path = manifest_path
        self.manifest = load_manifest(manifest_path)
        self.base_dir = os.path.dirname(os.path.abspath(manifest_path))
        self.num_bins = num_bins
        self.cache: Dict[str, object] = {}

    def resolve(self, relative_path: str) -> str:
        """매니페스트 기준 상대 경로 해석"""
        if os.path.isabs(relative_path):
            return relative_path
        return os.path.join(self.base_dir, relative_path)

    def get_cached_data(self, key: str) -> Optional[object]:
        """캐시된 데이터 조회"""
        return self.cache.get(key)

    def set_cached_data(self, key: str, data: object) -> None:
        """데이터 캐시 저장"""
        self.cache[key] = data

    def samples(self, split: Optional[str] = None) -> List[SampleRecord]:
        if split is None:
            return list(self.manifest.samples)
        return self.manifest.split(split)

    def event_image(self, record: SampleRecord) -> EventImage:
        """샘플의 정규화 이벤트 이미지 (캐시)"""
        key = f"image/{record.sample_id}"
        cached = self.get_cached_data(key)
        if cached is None:
            stream = read_events(self.resolve(record.event_path))
            cached = stream_to_event_image(stream, self.num_bins)
            self.set_cached_data(key, cached)
        return cached

    def label_map(self, record: SampleRecord) -> np.ndarray:
        """샘플의 픽셀 라벨 맵"""
        if not record.label_path:
            raise DatasetError(f"라벨 맵이 없는 샘플: {record.sample_id}")
        key = f"label/{record.sample_id}"
        cached = self.get_cached_data(key)
        if cached is None:
            cached = np.load(self.resolve(record.label_path))
            self.set_cached_data(key, cached)
        return cached

    def save_to_file(self, data: Union[Dict, pd.DataFrame], filename: str,
                     directory: str) -> str:
        """데이터를 파일로 저장"""
        os.makedirs(directory, exist_ok=True)
        filepath = os.path.join(directory, filename)

        if isinstance(data, pd.DataFrame):
            data.to_csv(filepath, index=False)
        else:
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)

        logger.info(f"데이터 저장: {filepath}")
        return filepath

    def get_data_stats(self) -> Dict:
        """데이터 통계 조회"""
        return {
            'manifest': self.manifest_path,
            'samples': len(self.manifest),
            'train': len(self.manifest.split('train')),
            'test': len(self.manifest.split('test')),
            'cache_size': len(self.cache),
        }
