"""
설정 관리자

섹션별 데이터클래스 + TOML 파일 + 환경 변수 + dotted 오버라이드
"""

import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

from ..core.exceptions import ConfigError
from ..utils.formatters import format_toml_value
from ..utils.validators import validate_config_value, validate_patch_size, require


@dataclass
class SimConfig:
    """이벤트 시뮬레이터 설정"""
    contrast_threshold: float = 0.2  # log 밝기 단위
    refractory_us: int = 0
    noise_rate_hz: float = 0.0  # 픽셀당
    log_eps: float = 1e-3
    seed: int = 0


@dataclass
class DatasetConfig:
    """사전학습 데이터셋 생성 설정"""
    root: str = "data/moving_shapes"
    num_samples: int = 96
    width: int = 64
    height: int = 64
    duration_us: int = 50_000
    num_frames: int = 8
    num_bins: int = 5  # 복셀 그리드 bin 수
    holdout_fraction: float = 0.25
    max_shapes: int = 3
    image_dir: str = ""  # 비어 있으면 moving-shapes 생성기 사용
    trajectory_pattern: str = "random-affine"
    trajectory_amplitude: float = 4.0


@dataclass
class AugmentConfig:
    """증강 범위"""
    rotation_deg: float = 15.0
    scale_range: Tuple[float, float] = (0.8, 1.2)
    translate_fraction: float = 0.1
    shear_deg: float = 5.0
    blur_probability: float = 0.5
    blur_sigma_range: Tuple[float, float] = (0.1, 2.0)
    jitter_probability: float = 0.8
    jitter_scale_range: Tuple[float, float] = (0.6, 1.4)
    jitter_offset_range: Tuple[float, float] = (-0.2, 0.2)
    mask_ratio_range: Tuple[float, float] = (0.1, 0.5)
    max_retries: int = 5


@dataclass
class ModelConfig:
    """백본 / 헤드 크기 (desk scale)"""
    image_size: int = 64
    patch_size: int = 8
    in_channels: int = 5
    embed_dim: int = 64
    depth: int = 4
    num_heads: int = 4
    mlp_ratio: int = 2
    head_hidden_dim: int = 128
    head_bottleneck_dim: int = 32
    out_dim: int = 256  # 프로토타입 수 d


@dataclass
class TrainConfig:
    """사전학습 설정 (기본 300 step, batch 32)"""
    lambda_context: float = 0.1
    lambda_image: float = 0.9
    num_contexts: int = 8
    kmeans_iters: int = 10
    kmeans_restarts: int = 1
    student_temp: float = 0.1
    teacher_temp: float = 0.04
    centering: bool = True
    center_rate: float = 0.9
    momentum_start: float = 0.996
    momentum_end: float = 1.0
    lr: float = 1e-3
    min_lr: float = 1e-6
    weight_decay: float = 0.04
    betas: Tuple[float, float] = (0.9, 0.999)
    warmup_fraction: float = 0.1
    steps: int = 300
    batch_size: int = 32
    seed: int = 7
    manifest: str = "data/moving_shapes/manifest.json"
    output_dir: str = "runs/pretrain"
    checkpoint_every: int = 100
    log_every: int = 10
    threads: int = 1
    precision: str = "float32"


@dataclass
class ProbeConfig:
    """선형 프로브 설정"""
    iterations: int = 500
    lr: float = 0.5
    l2: float = 1e-3
    num_classes: int = 2
    seed: int = 0
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    output_dir: str = "runs/probe"


@dataclass
class LoggingConfig:
    """로깅 설정"""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_enabled: bool = False
    file_path: str = "eventcompass.log"
    max_file_size_mb: int = 10
    backup_count: int = 5


SECTIONS = {
    'simulation': SimConfig,
    'dataset': DatasetConfig,
    'augment': AugmentConfig,
    'model': ModelConfig,
    'train': TrainConfig,
    'probe': ProbeConfig,
    'logging': LoggingConfig,
}


def parse_override_value(raw: str) -> Any:
    """오버라이드 값 파싱 (TOML 리터럴 문법, 실패 시 문자열)"""
    try:
        return tomllib.loads(f"value = {raw}")['value']
    except tomllib.TOMLDecodeError:
        return raw


class Settings:
    """통합 설정 관리자"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path
        self.simulation = SimConfig()
        self.dataset = DatasetConfig()
        self.augment = AugmentConfig()
        self.model = ModelConfig()
        self.train = TrainConfig()
        self.probe = ProbeConfig()
        self.logging = LoggingConfig()

        if config_path is not None:
            self.load_config()
        self.load_env_variables()

    def load_config(self):
        """TOML 설정 파일에서 로드"""
        if not os.path.exists(self.config_path):
            raise ConfigError(f"설정 파일을 찾을 수 없습니다: {self.config_path}")

        try:
            with open(self.config_path, 'rb') as f:
                config_data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"설정 파일 파싱 오류: {self.config_path}: {e}") from e

        for section, values in config_data.items():
            if section not in SECTIONS:
                raise ConfigError("알 수 없는 설정 섹션", key=section)
            if not isinstance(values, dict):
                raise ConfigError("섹션은 테이블이어야 합니다", key=section)
            for key, value in values.items():
                self.set_value(f"{section}.{key}", value)

    def load_env_variables(self):
        """환경 변수에서 로드"""
        if os.getenv('EVENTCOMPASS_LOG_LEVEL'):
            self.logging.level = os.getenv('EVENTCOMPASS_LOG_LEVEL')

    def set_value(self, dotted_key: str, value: Any):
        """dotted key로 값 설정 (알 수 없는 키는 ConfigError)"""
        section, _, name = dotted_key.partition('.')
        if section not in SECTIONS or not name:
            raise ConfigError("알 수 없는 설정 키", key=dotted_key)

        instance = getattr(self, section)
        field_types = {f.name: f for f in fields(instance)}
        if name not in field_types:
            raise ConfigError("알 수 없는 설정 키", key=dotted_key)

        value = self._coerce(dotted_key, getattr(instance, name), value)
        if not validate_config_value(dotted_key, value):
            raise ConfigError(f"유효하지 않은 값: {value!r}", key=dotted_key)
        setattr(instance, name, value)

    def apply_overrides(self, overrides: List[str]):
        """`section.key=value` 목록 적용"""
        for item in overrides or []:
            if '=' not in item:
                raise ConfigError(f"오버라이드 형식은 key=value 입니다: {item}")
            key, raw = item.split('=', 1)
            self.set_value(key.strip(), parse_override_value(raw.strip()))

    def _coerce(self, key: str, current: Any, value: Any) -> Any:
        """기본값 타입에 맞게 변환"""
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"bool 값이 필요합니다: {value!r}", key=key)
            return value
        if isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if isinstance(current, tuple):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"배열 값이 필요합니다: {value!r}", key=key)
            return tuple(float(v) if isinstance(current[0], float) else v for v in value)
        if isinstance(current, list) and isinstance(value, (list, tuple)):
            return list(value)
        if current is not None and not isinstance(value, type(current)):
            raise ConfigError(f"{type(current).__name__} 값이 필요합니다: {value!r}", key=key)
        return value

    def validate(self):
        """섹션 간 제약 검증"""
        require(validate_patch_size(self.model.image_size, self.model.patch_size),
                "patch_size가 image_size를 나누어야 합니다", key="model.patch_size")
        require(self.model.embed_dim % self.model.num_heads == 0,
                "embed_dim은 num_heads의 배수여야 합니다", key="model.num_heads")
        require(self.model.in_channels == self.dataset.num_bins,
                "in_channels는 dataset.num_bins와 같아야 합니다", key="model.in_channels")
        require(self.dataset.width == self.model.image_size and self.dataset.height == self.model.image_size,
                "데이터셋 해상도가 model.image_size와 달라요", key="dataset.width")
        require(self.train.precision in ("float32", "float64"),
                "precision은 float32 / float64", key="train.precision")
        num_patches = (self.model.image_size // self.model.patch_size) ** 2
        require(self.train.num_contexts <= num_patches,
                "num_contexts가 패치 수보다 큽니다", key="train.num_contexts")
        return self

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """섹션별 딕셔너리"""
        result = {}
        for section in SECTIONS:
            data = asdict(getattr(self, section))
            result[section] = {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}
        return result

    @classmethod
    def from_dict(cls, data: Dict[str, Dict[str, Any]]) -> "Settings":
        """딕셔너리(체크포인트 스냅샷 등)에서 복원"""
        settings = cls()
        for section, values in data.items():
            for key, value in values.items():
                settings.set_value(f"{section}.{key}", value)
        return settings

    def to_toml(self) -> str:
        """TOML 텍스트로 직렬화"""
        lines = []
        for section, values in self.to_dict().items():
            lines.append(f"[{section}]")
            for key, value in values.items():
                lines.append(f"{key} = {format_toml_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def save_config(self, path: str):
        """설정을 TOML 파일로 저장"""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_toml())

    def save_run_header(self, out_dir: str, argv: Optional[List[str]] = None) -> str:
        """해석된 설정 + 버전을 출력 디렉토리에 기록"""
        from .. import __version__

        os.makedirs(out_dir, exist_ok=True)
        header = {
            'version': __version__,
            'argv': list(argv if argv is not None else sys.argv),
            'config_path': self.config_path,
            'config': self.to_dict(),
        }
        path = os.path.join(out_dir, 'run_header.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(header, f, indent=2, sort_keys=True, ensure_ascii=False)
        return path

    def get_summary(self) -> Dict[str, Any]:
        """설정 요약 조회"""
        return {
            'config_path': self.config_path,
            'image_size': self.model.image_size,
            'patch_size': self.model.patch_size,
            'num_contexts': self.train.num_contexts,
            'lambdas': (self.train.lambda_context, self.train.lambda_image),
            'steps': self.train.steps,
            'batch_size': self.train.batch_size,
            'seed': self.train.seed,
        }
