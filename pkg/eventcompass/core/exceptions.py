"""
예외 계층 정의

CLI 종료 코드: ConfigError → 1, DataError / NumericError → 2
"""


class EventCompassError(Exception):
    """패키지 공통 기본 예외"""


class ConfigError(EventCompassError):
    """설정 파일 / 오버라이드 / 사용법 오류"""

    def __init__(self, message: str, key: str = None):
        self.key = key
        super().__init__(f"{message} (key: {key})" if key else message)


class ShapeError(EventCompassError, ValueError):
    """텐서 모양 불일치"""


class DataError(EventCompassError):
    """입력 데이터 오류"""


class EventFormatError(DataError):
    """이벤트 파일 / 체크포인트 바이너리 포맷 오류"""

    def __init__(self, message: str, offset: int = None, path=None):
        self.offset = offset
        self.path = path
        parts = [message]
        if offset is not None:
            parts.append(f"offset={offset}")
        if path is not None:
            parts.append(f"path={path}")
        super().__init__(" | ".join(parts))


class DatasetError(DataError):
    """데이터셋 매니페스트 오류"""


class NumericError(EventCompassError):
    """수치 계산 오류"""


class NonFiniteError(NumericError):
    """NaN / Inf 발생"""

    def __init__(self, message: str, step: int = None, sample_index: int = None):
        self.step = step
        self.sample_index = sample_index
        details = []
        if step is not None:
            details.append(f"step={step}")
        if sample_index is not None:
            details.append(f"sample={sample_index}")
        super().__init__(f"{message} ({', '.join(details)})" if details else message)


class DegenerateAugmentationError(NumericError):
    """사용 가능한 컨텍스트가 하나도 없는 증강"""
