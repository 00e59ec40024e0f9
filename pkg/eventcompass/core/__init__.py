"""
EventCompass Core Module

이벤트 데이터 모델, 파일 입출력, 표현 변환
"""

from .models import Event, EventStream, VoxelGrid, EventImage, SampleRecord, DatasetManifest
from .event_io import read_events, write_events
from .representation import voxelize, to_event_image, polarity_count_image, stream_to_event_image
from .geometry import AffineTransform2D, warp_image

__all__ = [
    "Event", "EventStream", "VoxelGrid", "EventImage", "SampleRecord", "DatasetManifest",
    "read_events", "write_events",
    "voxelize", "to_event_image", "polarity_count_image", "stream_to_event_image",
    "AffineTransform2D", "warp_image"
]
