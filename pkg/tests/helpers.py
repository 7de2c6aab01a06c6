"""Shared constants and builders for the test suite."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any


GOLDEN = "(-1+sqrt(5))/2"
SILVER = "-1+sqrt(2)"

SAWTOOTH_ROOF: dict[str, Any] = {"constant": 1.0, "jumps": [{"beta": "0", "d": 0.5}]}


def scenario(experiment: str, **overrides: Any) -> dict[str, Any]:
    """Minimal valid scenario document on the golden rotation."""
    data: dict[str, Any] = {
        "alpha": GOLDEN,
        "roof": SAWTOOTH_ROOF,
        "experiment": experiment,
        "output": {"directory": "out", "format": "both"},
    }
    data.update(overrides)
    return data


def write_scenario(directory: Path, name: str, data: dict[str, Any]) -> Path:
    path = directory / f"{name}.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def all_files(directory: Path) -> dict[str, bytes]:
    """Relative path → content for every file under ``directory``."""
    return {
        str(p.relative_to(directory)): p.read_bytes()
        for p in sorted(directory.rglob("*"))
        if p.is_file()
    }
