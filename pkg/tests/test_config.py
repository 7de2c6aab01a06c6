"""Tests for configuration loader."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest
from structlog.testing import capture_logs

from specflow import config as lab_config
from specflow.config import (
    MIN_PRECISION_BITS,
    PRECISION_ENV_VAR,
    PROJECT_DIR_ENV_VAR,
    LabConfig,
    detect_precision_bits,
    get_config,
    load_config,
    read_pyproject_settings,
    reset_config,
)


if TYPE_CHECKING:
    from pathlib import Path


def _write_pyproject(directory: Path, body: str) -> None:
    (directory / "pyproject.toml").write_text(body, encoding="utf-8")


class TestLabConfig:
    def test_default_values(self) -> None:
        config = LabConfig()
        assert config.precision_bits == 128
        assert config.birkhoff_cap == 1_000_000
        assert config.theta_max == 1e3
        assert config.enumeration_cap == 10_000_000
        assert config.boundary_bits == 80
        assert config.identity_tolerance == 1e-9

    def test_is_frozen(self) -> None:
        config = LabConfig()
        with pytest.raises(AttributeError):
            config.precision_bits = 256  # type: ignore[misc]


class TestReadPyprojectSettings:
    def test_missing_file_returns_empty(self, tmp_path: Path) -> None:
        assert read_pyproject_settings(tmp_path) == {}

    def test_reads_dashed_keys(self, tmp_path: Path) -> None:
        _write_pyproject(
            tmp_path,
            "[tool.specflow]\nprecision-bits = 192\ntheta-max = 50.0\n",
        )
        assert read_pyproject_settings(tmp_path) == {
            "precision_bits": 192,
            "theta_max": 50.0,
        }

    def test_int_accepted_for_float_setting(self, tmp_path: Path) -> None:
        _write_pyproject(tmp_path, "[tool.specflow]\ntheta-max = 20\n")
        settings = read_pyproject_settings(tmp_path)
        assert settings["theta_max"] == 20.0
        assert isinstance(settings["theta_max"], float)

    def test_no_tool_table(self, tmp_path: Path) -> None:
        _write_pyproject(tmp_path, '[project]\nname = "x"\n')
        assert read_pyproject_settings(tmp_path) == {}

    def test_unknown_key_is_dropped(self, tmp_path: Path) -> None:
        _write_pyproject(tmp_path, "[tool.specflow]\ncolour = 3\n")
        with capture_logs() as logs:
            settings = read_pyproject_settings(tmp_path)
        assert settings == {}
        assert logs[0]["event"] == "unknown_setting_ignored"

    @pytest.mark.parametrize(
        "line",
        [
            "birkhoff-cap = -5",
            "birkhoff-cap = 2.5",
            "birkhoff-cap = true",
            'birkhoff-cap = "many"',
            "precision-bits = 32",
        ],
    )
    def test_invalid_values_fall_back(self, tmp_path: Path, line: str) -> None:
        _write_pyproject(tmp_path, f"[tool.specflow]\n{line}\n")
        with capture_logs() as logs:
            settings = read_pyproject_settings(tmp_path)
        name = line.split(" = ")[0].replace("-", "_")
        assert settings[name] == getattr(LabConfig(), name)
        assert any(e["event"] == "invalid_setting_ignored" for e in logs)

    def test_malformed_toml(self, tmp_path: Path) -> None:
        _write_pyproject(tmp_path, "[tool.specflow\nbroken")
        with capture_logs() as logs:
            assert read_pyproject_settings(tmp_path) == {}
        assert logs[0]["event"] == "pyproject_unreadable"


class TestDetectPrecisionBits:
    def test_unset(self) -> None:
        assert detect_precision_bits() is None

    def test_valid(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv(PRECISION_ENV_VAR, "256")
        assert detect_precision_bits() == 256

    @pytest.mark.parametrize("value", ["lots", str(MIN_PRECISION_BITS - 1)])
    def test_ignored(self, monkeypatch: pytest.MonkeyPatch, value: str) -> None:
        monkeypatch.setenv(PRECISION_ENV_VAR, value)
        with capture_logs() as logs:
            assert detect_precision_bits() is None
        assert logs[0]["event"] == "precision_env_ignored"


class TestLoadConfig:
    def test_defaults_without_pyproject(self, tmp_path: Path) -> None:
        assert load_config(tmp_path) == LabConfig()

    def test_pyproject_then_environment(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        _write_pyproject(
            tmp_path, "[tool.specflow]\nprecision-bits = 192\ncf-depth = 60\n"
        )
        monkeypatch.setenv(PRECISION_ENV_VAR, "256")
        config = load_config(tmp_path)
        assert config.precision_bits == 256
        assert config.cf_depth == 60

    def test_project_dir_from_environment(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        _write_pyproject(tmp_path, "[tool.specflow]\nboundary-bits = 64\n")
        monkeypatch.setenv(PROJECT_DIR_ENV_VAR, str(tmp_path))
        assert load_config().boundary_bits == 64


class TestCachedConfig:
    def test_get_config_caches(self) -> None:
        assert get_config() is get_config()

    def test_reset_reloads(self, monkeypatch: pytest.MonkeyPatch) -> None:
        first = get_config()
        monkeypatch.setenv(PRECISION_ENV_VAR, "160")
        assert get_config() is first
        reset_config()
        assert get_config().precision_bits == 160

    def test_override_is_visible(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setattr(lab_config, "_config", LabConfig(cf_depth=12))
        assert get_config().cf_depth == 12
