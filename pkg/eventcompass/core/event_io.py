"""
이벤트 바이너리 파일 입출력 (EVS1)

little-endian:
    magic "EVS1" | width u16 | height u16 | count u64
    count × {t u64, x u16, y u16, p i8, pad u8}
"""

import os
import struct
from typing import Union

import numpy as np

from .exceptions import DataError, EventFormatError
from .models import EventStream

MAGIC = b"EVS1"
HEADER = struct.Struct("<4sHHQ")
RECORD_DTYPE = np.dtype([
    ('t', '<u8'),
    ('x', '<u2'),
    ('y', '<u2'),
    ('p', 'i1'),
    ('pad', 'u1'),
])

PathLike = Union[str, os.PathLike]


def encode_events(stream: EventStream) -> bytes:
    """스트림을 EVS1 바이트열로 인코딩"""
    records = np.zeros(len(stream), dtype=RECORD_DTYPE)
    records['t'] = stream.t
    records['x'] = stream.x
    records['y'] = stream.y
    records['p'] = stream.p
    return HEADER.pack(MAGIC, stream.width, stream.height, len(stream)) + records.tobytes()


def decode_events(payload: bytes, path=None) -> EventStream:
    """EVS1 바이트열 디코딩"""
    if len(payload) == 0:
        raise EventFormatError("빈 이벤트 파일", offset=0, path=path)
    if len(payload) < HEADER.size:
        raise EventFormatError("헤더가 잘렸습니다", offset=len(payload), path=path)

    magic, width, height, count = HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise EventFormatError(f"잘못된 magic {magic!r} (기대값 {MAGIC!r})", offset=0, path=path)

    expected = HEADER.size + count * RECORD_DTYPE.itemsize
    if len(payload) != expected:
        raise EventFormatError(
            f"레코드 길이 불일치: {count}개 기대, 파일 크기 {len(payload)} (기대 {expected})",
            offset=min(len(payload), expected), path=path)

    records = np.frombuffer(payload, dtype=RECORD_DTYPE, count=count, offset=HEADER.size)
    try:
        return EventStream(width, height, records['t'], records['x'], records['y'], records['p'])
    except DataError as e:
        raise EventFormatError(f"레코드 내용 오류: {e}", offset=HEADER.size, path=path) from e


def write_events(path: PathLike, stream: EventStream) -> str:
    """이벤트 파일 저장"""
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(encode_events(stream))
    return os.fspath(path)


def read_events(path: PathLike) -> EventStream:
    """이벤트 파일 로드"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"파일을 찾을 수 없습니다: {path}")
    with open(path, 'rb') as f:
        payload = f.read()
    return decode_events(payload, path=os.fspath(path))
