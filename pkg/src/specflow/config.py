"""Lab configuration loader.

Settings come from the ``[tool.specflow]`` table of the project's
pyproject.toml, with ``SPECFLOW_PRECISION_BITS`` overriding the working
precision. Missing or unreadable files fall back to defaults.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

import structlog


# Python 3.10 compatibility for tomllib
if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


log = structlog.get_logger()

PRECISION_ENV_VAR = "SPECFLOW_PRECISION_BITS"
PROJECT_DIR_ENV_VAR = "SPECFLOW_PROJECT_DIR"
MIN_PRECISION_BITS = 64


@dataclass(frozen=True)
class LabConfig:
    """Numerical settings shared by every module."""

    precision_bits: int = 128
    birkhoff_cap: int = 1_000_000
    theta_max: float = 1e3
    enumeration_cap: int = 10_000_000
    boundary_bits: int = 80
    gap_tolerance: float = 1e-24
    variation_grid: int = 2**14
    variation_tolerance: float = 1e-8
    rho_tolerance: float = 1e-8
    identity_tolerance: float = 1e-9
    cf_depth: int = 48


def _coerce(value: Any, default: Any) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return default
    if isinstance(default, int) and not isinstance(value, int):
        return default
    if value <= 0:
        return default
    return type(default)(value)


def read_pyproject_settings(project_root: Path) -> dict[str, Any]:
    """Read ``[tool.specflow]`` from pyproject.toml.

    Keys use dashes in TOML and are returned with underscores. Unknown keys
    are dropped.

    Args:
        project_root: Directory containing pyproject.toml

    Returns:
        Mapping of LabConfig field names to validated values
    """
    pyproject = project_root / "pyproject.toml"
    if not pyproject.exists():
        return {}

    try:
        with pyproject.open("rb") as f:
            data = tomllib.load(f)
    except (tomllib.TOMLDecodeError, OSError):
        log.warning("pyproject_unreadable", path=str(pyproject))
        return {}

    table = data.get("tool", {}).get("specflow", {})
    if not isinstance(table, dict):
        return {}

    defaults = LabConfig()
    known = {f.name for f in fields(LabConfig)}
    settings: dict[str, Any] = {}
    for key, value in table.items():
        name = str(key).replace("-", "_")
        if name not in known:
            log.warning("unknown_setting_ignored", key=key)
            continue
        default = getattr(defaults, name)
        coerced = _coerce(value, default)
        if name == "precision_bits" and coerced < MIN_PRECISION_BITS:
            coerced = default
        if coerced == default and value != default:
            log.warning("invalid_setting_ignored", key=key, value=value)
        settings[name] = coerced
    return settings


def detect_precision_bits() -> int | None:
    """Return the precision requested through the environment, if valid."""
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None:
        return None
    try:
        bits = int(raw)
    except ValueError:
        log.warning("precision_env_ignored", value=raw, reason="not an integer")
        return None
    if bits < MIN_PRECISION_BITS:
        log.warning(
            "precision_env_ignored", value=raw, reason=f"below {MIN_PRECISION_BITS}"
        )
        return None
    return bits


def load_config(project_root: Path | None = None) -> LabConfig:
    """Load lab configuration.

    Args:
        project_root: Directory holding pyproject.toml. If None, uses
                      SPECFLOW_PROJECT_DIR or the current directory.
    """
    if project_root is None:
        project_root = Path(os.environ.get(PROJECT_DIR_ENV_VAR, "."))

    config = replace(LabConfig(), **read_pyproject_settings(project_root))
    bits = detect_precision_bits()
    if bits is not None:
        config = replace(config, precision_bits=bits)
    return config


_config: LabConfig | None = None


def get_config() -> LabConfig:
    """Get or create the process-wide configuration."""
    global _config  # noqa: PLW0603
    if _config is None:
        _config = load_config()
    return _config


def reset_config() -> None:
    """Drop the cached configuration (next get_config reloads)."""
    global _config  # noqa: PLW0603
    _config = None
