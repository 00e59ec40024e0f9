"""
이벤트 데이터 모델 정의
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from .exceptions import DataError, ShapeError


@dataclass(frozen=True)
class Event:
    """단일 이벤트 (t: µs, x/y: 픽셀, polarity: ±1)"""
    t: int
    x: int
    y: int
    polarity: int

    def to_dict(self) -> Dict:
        return {'t': self.t, 'x': self.x, 'y': self.y, 'polarity': self.polarity}


def _readonly(array: np.ndarray, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class EventStream:
    """시간순 이벤트 스트림 (열 단위 저장)"""
    width: int
    height: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ('x', 'y'):
            raw = np.asarray(getattr(self, name))
            if raw.size and (np.any(raw < 0) or np.any(raw > 0xFFFF)):
                raise ShapeError(f"{name} 좌표가 uint16 범위 [0, 65535] 를 벗어납니다")
        object.__setattr__(self, 't', _readonly(self.t, np.uint64))
        object.__setattr__(self, 'x', _readonly(self.x, np.uint16))
        object.__setattr__(self, 'y', _readonly(self.y, np.uint16))
        object.__setattr__(self, 'p', _readonly(self.p, np.int8))

        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ShapeError("이벤트 열 길이가 서로 다릅니다")
        if not (0 < self.width <= 0xFFFF and 0 < self.height <= 0xFFFF):
            raise DataError(f"센서 크기가 잘못되었습니다: {self.width}x{self.height}")
        if n == 0:
            return
        if np.any(self.x >= self.width) or np.any(self.y >= self.height):
            raise DataError("센서 범위를 벗어난 이벤트 좌표")
        if not np.all((self.p == 1) | (self.p == -1)):
            raise DataError("polarity 는 +1 또는 -1 이어야 합니다")
        if np.any(np.diff(self.t.astype(np.int64)) < 0):
            raise DataError("타임스탬프가 정렬되어 있지 않습니다")

    @classmethod
    def empty(cls, width: int, height: int) -> "EventStream":
        return cls(width, height, [], [], [], [])

    @classmethod
    def from_events(cls, width: int, height: int, events: List[Event]) -> "EventStream":
        """Event 리스트에서 생성"""
        return cls(
            width, height,
            [e.t for e in events], [e.x for e in events],
            [e.y for e in events], [e.polarity for e in events]
        )

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for t, x, y, p in zip(self.t, self.x, self.y, self.p):
            yield Event(int(t), int(x), int(y), int(p))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.t, other.t) and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y) and np.array_equal(self.p, other.p))

    @property
    def duration(self) -> int:
        if len(self) == 0:
            return 0
        return int(self.t[-1] - self.t[0])

    def polarity_sum(self) -> np.ndarray:
        """픽셀별 polarity 합 (H×W)"""
        total = np.zeros((self.height, self.width), dtype=np.int64)
        np.add.at(total, (self.y.astype(np.int64), self.x.astype(np.int64)), self.p.astype(np.int64))
        return total

    def get_stats(self) -> Dict:
        """스트림 요약"""
        return {
            'width': self.width,
            'height': self.height,
            'count': len(self),
            'positive': int((self.p > 0).sum()),
            'negative': int((self.p < 0).sum()),
            'duration_us': self.duration,
        }


@dataclass(frozen=True)
class VoxelGrid:
    """B×H×W 시간 bin 복셀 그리드"""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeError(f"VoxelGrid 는 3차원이어야 합니다: {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def signed_sum(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class EventImage:
    """네트워크 입력 이미지 (C×H×W)"""
    values: np.ndarray
    kind: str = "voxel"  # voxel | polarity_count

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeError(f"EventImage 는 3차원이어야 합니다: {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("EventImage 에 NaN/Inf 가 있습니다")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def with_values(self, values: np.ndarray) -> "EventImage":
        return EventImage(values, kind=self.kind)


@dataclass
class SampleRecord:
    """매니페스트 샘플 레코드"""
    sample_id: str
    event_path: str
    width: int
    height: int
    duration: int
    source: str
    label_path: Optional[str] = None
    split: str = "train"

    def to_dict(self) -> Dict:
        return {
            'sample_id': self.sample_id,
            'event_path': self.event_path,
            'width': self.width,
            'height': self.height,
            'duration': self.duration,
            'source': self.source,
            'label_path': self.label_path,
            'split': self.split,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SampleRecord":
        return cls(**data)


@dataclass
class DatasetManifest:
    """데이터셋 매니페스트"""
    root: str
    samples: List[SampleRecord]
    seed: int
    simulator_version: str
    config: Dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def split(self, name: str) -> List[SampleRecord]:
        return [s for s in self.samples if s.split == name]

    def to_dict(self) -> Dict:
        return {
            'root': self.root,
            'samples': [s.to_dict() for s in self.samples],
            'seed': self.seed,
            'simulator_version': self.simulator_version,
            'config': self.config,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "DatasetManifest":
        return cls(
            root=data['root'],
            samples=[SampleRecord.from_dict(s) for s in data['samples']],
            seed=data['seed'],
            simulator_version=data['simulator_version'],
            config=data.get('config', {}),
        )
