"""
로깅 유틸리티

콘솔 핸들러는 항상, 회전 파일 핸들러는 실행 디렉터리 기준으로 선택적으로 붙인다.
"""

import logging
import logging.handlers
import os
from typing import List, Optional

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# 학습 로그를 덮어버리는 서드파티 로거
NOISY_LOGGERS = ("matplotlib", "PIL")

_MB = 1024 * 1024


def _build_handlers(formatter: logging.Formatter, log_file: Optional[str],
                    max_file_size_mb: int, backup_count: int) -> List[logging.Handler]:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
        handlers.append(logging.handlers.RotatingFileHandler(
            log_file, maxBytes=max_file_size_mb * _MB, backupCount=backup_count, encoding='utf-8'
        ))
    for handler in handlers:
        handler.setFormatter(formatter)
    return handlers


def setup_logging(level: str = "INFO", format_string: str = DEFAULT_FORMAT,
                  log_file: Optional[str] = None, max_file_size_mb: int = 10,
                  backup_count: int = 5) -> logging.Logger:
    """루트 로거의 핸들러를 교체하고 레벨 설정"""
    root = logging.getLogger()
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO
    root.setLevel(numeric_level)

    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    for handler in _build_handlers(logging.Formatter(format_string), log_file, max_file_size_mb, backup_count):
        root.addHandler(handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))
    return root


def resolve_log_file(logging_config, output_dir: Optional[str] = None) -> Optional[str]:
    """상대 경로 로그 파일은 실행 출력 디렉터리 아래로"""
    if not logging_config.file_enabled:
        return None
    path = logging_config.file_path
    if output_dir and not os.path.isabs(path):
        path = os.path.join(output_dir, path)
    return path


def configure_from_settings(logging_config, output_dir: Optional[str] = None,
                            level_override: Optional[str] = None) -> logging.Logger:
    """LoggingConfig 섹션으로 로깅 설정 (-v / -q 가 level_override)"""
    return setup_logging(
        level=level_override or logging_config.level,
        format_string=logging_config.format,
        log_file=resolve_log_file(logging_config, output_dir),
        max_file_size_mb=logging_config.max_file_size_mb,
        backup_count=logging_config.backup_count,
    )


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
