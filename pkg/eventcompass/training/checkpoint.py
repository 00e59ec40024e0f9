"""
ECKP 체크포인트 / 특징 파일 컨테이너

little-endian:
    magic "ECKP" | version u32 | config_len u64 | config JSON | step u64 | tensor_count u32
    tensor_count × {name_len u32 | name UTF-8 | dtype u8 | rank u8 | dims u64 × rank | raw data}
    rng_len u64 | RNG 상태 JSON
"""

import json
import os
import struct
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import EventFormatError

MAGIC = b"ECKP"
VERSION = 1

DTYPE_TAGS = {
    np.dtype('<f4'): 1,
    np.dtype('<f8'): 2,
    np.dtype('<i8'): 3,
    np.dtype('i1'): 4,
    np.dtype('u1'): 5,
    np.dtype('<i4'): 6,
}
TAG_DTYPES = {tag: dtype for dtype, tag in DTYPE_TAGS.items()}


def _json_bytes(data) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False).encode('utf-8')


@dataclass
class Checkpoint:
    """디코딩된 컨테이너"""
    config: Dict
    step: int
    tensors: Dict[str, np.ndarray]
    rng_state: Dict = field(default_factory=dict)
    version: int = VERSION


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """Checkpoint → 바이트 (텐서는 삽입 순서대로)"""
    config = _json_bytes(checkpoint.config)
    parts = [MAGIC, struct.pack('<IQ', checkpoint.version, len(config)), config,
             struct.pack('<QI', checkpoint.step, len(checkpoint.tensors))]

    for name, array in checkpoint.tensors.items():
        array = np.asarray(array)
        dtype = array.dtype.newbyteorder('<') if array.dtype.byteorder == '>' else array.dtype
        dtype = np.dtype(dtype.str.replace('=', '<'))
        if dtype not in DTYPE_TAGS:
            raise TypeError(f"지원하지 않는 텐서 dtype: {name}: {array.dtype}")
        encoded = name.encode('utf-8')
        parts.append(struct.pack('<I', len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack('<BB', DTYPE_TAGS[dtype], array.ndim))
        parts.append(struct.pack(f'<{array.ndim}Q', *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=dtype).tobytes())

    rng = _json_bytes(checkpoint.rng_state)
    parts.append(struct.pack('<Q', len(rng)))
    parts.append(rng)
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes, path):
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.payload):
            raise EventFormatError(f"체크포인트가 잘렸습니다 ({what})", offset=self.offset, path=self.path)
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(payload: bytes, path=None) -> Checkpoint:
    """바이트 → Checkpoint"""
    reader = _Reader(payload, path)
    if len(payload) == 0:
        raise EventFormatError("빈 체크포인트 파일", offset=0, path=path)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise EventFormatError(f"잘못된 magic {magic!r} (기대값 {MAGIC!r})", offset=0, path=path)

    version, config_len = reader.unpack('<IQ', "header")
    if version != VERSION:
        raise EventFormatError(f"지원하지 않는 버전: {version}", offset=4, path=path)
    config = json.loads(reader.take(config_len, "config").decode('utf-8'))
    step, count = reader.unpack('<QI', "step")

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack('<I', "name length")
        name = reader.take(name_len, "name").decode('utf-8')
        tag_offset = reader.offset
        tag, rank = reader.unpack('<BB', "dtype")
        if tag not in TAG_DTYPES:
            raise EventFormatError(f"알 수 없는 dtype 태그 {tag}: {name}", offset=tag_offset, path=path)
        dims = reader.unpack(f'<{rank}Q', "dims") if rank else ()
        dtype = TAG_DTYPES[tag]
        size = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        array = np.frombuffer(reader.take(size, name), dtype=dtype).reshape(dims).copy()
        tensors[name] = array

    (rng_len,) = reader.unpack('<Q', "rng length")
    rng_state = json.loads(reader.take(rng_len, "rng").decode('utf-8'))
    if reader.offset != len(payload):
        raise EventFormatError("체크포인트 끝에 남는 바이트가 있습니다", offset=reader.offset, path=path)
    return Checkpoint(config=config, step=step, tensors=tensors, rng_state=rng_state, version=version)


def save_checkpoint(path: str, checkpoint: Checkpoint) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(encode_checkpoint(checkpoint))
    return path


def load_checkpoint(path: str) -> Checkpoint:
    if not os.path.exists(path):
        raise FileNotFoundError(f"체크포인트를 찾을 수 없습니다: {path}")
    with open(path, 'rb') as f:
        payload = f.read()
    return decode_checkpoint(payload, path=path)


def checkpoint_id(path: Optional[str]) -> str:
    """ProbeReport 에 남길 체크포인트 식별자"""
    if path is None:
        return "random-init"
    return os.path.basename(path)
