"""
데이터 포맷팅 유틸리티
"""

import json
import math


def format_loss(value: float, decimals: int = 4) -> str:
    """손실 값 포맷팅"""
    if value is None:
        return "N/A"
    if not math.isfinite(value):
        return str(value)
    return f"{value:.{decimals}f}"


def format_percentage(ratio: float, decimals: int = 2) -> str:
    """[0, 1] 비율을 퍼센트로"""
    if ratio is None:
        return "N/A"
    return f"{ratio * 100:.{decimals}f}%"


def format_signed(value: float, decimals: int = 2) -> str:
    """부호 포함 포맷팅"""
    if value is None:
        return "N/A"
    sign = "+" if value > 0 else ""
    return f"{sign}{value:.{decimals}f}"


def format_duration_us(duration_us: int) -> str:
    """마이크로초 길이 포맷팅"""
    if duration_us >= 1_000_000:
        return f"{duration_us / 1e6:.2f}s"
    if duration_us >= 1_000:
        return f"{duration_us / 1e3:.1f}ms"
    return f"{duration_us}us"


def format_count(count: int) -> str:
    """큰 정수 포맷팅"""
    if count >= 1e6:
        return f"{count / 1e6:.2f}M"
    if count >= 1e3:
        return f"{count / 1e3:.1f}K"
    return str(count)


def format_toml_value(value) -> str:
    """TOML 리터럴로 다시 파싱되는 형태로 값 출력"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_toml_value(v) for v in value) + "]"
    if value is None:
        return '""'
    raise TypeError(f"TOML로 표현할 수 없는 값: {value!r}")
