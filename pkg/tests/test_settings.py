"""
설정 로드 / 오버라이드 / 검증 테스트
"""

import json
import os

import pytest

from eventcompass.config.settings import Settings, parse_override_value
from eventcompass.core.exceptions import ConfigError

from conftest import make_settings

DEFAULT_CONFIG = os.path.join(os.path.dirname(__file__), "..", "config", "default.toml")


def test_shipped_default_config_is_valid():
    settings = Settings(DEFAULT_CONFIG).validate()
    assert settings.model.in_channels == settings.dataset.num_bins
    assert settings.train.lambda_context == pytest.approx(0.1)
    assert settings.train.lambda_image == pytest.approx(0.9)


@pytest.mark.parametrize("raw, expected", [
    ("3", 3),
    ("0.5", 0.5),
    ("true", True),
    ("[1, 2]", [1, 2]),
    ('"text"', "text"),
    ("runs/pretrain", "runs/pretrain"),
])
def test_parse_override_value(raw, expected):
    assert parse_override_value(raw) == expected


def test_overrides_are_coerced_to_field_types():
    settings = Settings()
    settings.apply_overrides(["train.lr=1", "augment.scale_range=[1, 2]", "train.output_dir=runs/x"])
    assert settings.train.lr == 1.0 and isinstance(settings.train.lr, float)
    assert settings.augment.scale_range == (1.0, 2.0)
    assert settings.train.output_dir == "runs/x"


@pytest.mark.parametrize("override", [
    "train.unknown=1",
    "nosection.key=1",
    "train.steps=-1",
    "train.teacher_temp=0",
    "train.centering=1",
    "train.batch_size=two",
    "augment.mask_ratio_range=[0.5, 0.1]",
    "missing_equals_sign",
])
def test_bad_overrides_raise_config_error(override):
    with pytest.raises(ConfigError):
        Settings().apply_overrides([override])


@pytest.mark.parametrize("overrides", [
    {"model__patch_size": 5},
    {"model__num_heads": 3},
    {"model__in_channels": 4},
    {"dataset__width": 32},
    {"train__precision": "float16"},
    {"train__num_contexts": 17},
])
def test_cross_section_validation(overrides):
    with pytest.raises(ConfigError):
        make_settings(**overrides)


def test_toml_round_trip(tmp_path):
    settings = make_settings(train__lambda_context=0.25, probe__seeds=[3, 4])
    path = tmp_path / "saved.toml"
    settings.save_config(str(path))
    loaded = Settings(str(path)).validate()
    assert loaded.to_dict() == settings.to_dict()


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        Settings(str(tmp_path / "missing.toml"))
    broken = tmp_path / "broken.toml"
    broken.write_text("[train\nsteps = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        Settings(str(broken))
    unknown = tmp_path / "unknown.toml"
    unknown.write_text("[server]\nport = 80\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        Settings(str(unknown))


def test_environment_log_level(monkeypatch):
    monkeypatch.setenv("EVENTCOMPASS_LOG_LEVEL", "DEBUG")
    assert Settings().logging.level == "DEBUG"


def test_run_header(tmp_path):
    settings = make_settings()
    path = settings.save_run_header(str(tmp_path / "out"), argv=["eventcompass", "pretrain"])
    header = json.loads(open(path, encoding="utf-8").read())
    assert header["argv"] == ["eventcompass", "pretrain"]
    assert header["config"] == settings.to_dict()
    assert "version" in header


def test_summary():
    summary = make_settings().get_summary()
    assert summary["patch_size"] == 4
    assert summary["lambdas"] == (0.1, 0.9)


def test_log_file_lands_in_run_directory(tmp_path):
    import logging

    from eventcompass.utils.logger import configure_from_settings, resolve_log_file

    settings = make_settings(logging__file_enabled=True)
    expected = os.path.join(str(tmp_path), "eventcompass.log")
    assert resolve_log_file(settings.logging, str(tmp_path)) == expected
    assert resolve_log_file(make_settings().logging, str(tmp_path)) is None

    root = configure_from_settings(settings.logging, str(tmp_path), level_override="WARNING")
    try:
        assert root.level == logging.WARNING
        assert len(root.handlers) == 2
        logging.getLogger("eventcompass.test").warning("기록")
        for handler in root.handlers:
            handler.flush()
        assert "기록" in open(expected, encoding="utf-8").read()
    finally:
        configure_from_settings(make_settings().logging)
