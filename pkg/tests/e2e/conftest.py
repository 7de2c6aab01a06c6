"""Fixtures for the end-to-end acceptance runs."""

from __future__ import annotations

import shutil
from typing import TYPE_CHECKING

import pytest

from specflow.experiment_cli import run_scenario


if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path

    from specflow.models.api import RunReport


@pytest.fixture
def lab_dir(tmp_path: Path, scenarios_dir: Path) -> Path:
    """Writable copy of the shipped scenarios.

    Outputs land in ``<copy>/out`` so the checkout stays clean.
    """
    target = tmp_path / "scenarios"
    shutil.copytree(scenarios_dir, target, ignore=shutil.ignore_patterns("out"))
    return target


@pytest.fixture
def run_shipped(lab_dir: Path) -> Callable[[str], RunReport]:
    """Run one shipped scenario by stem and return its report."""

    def run(stem: str) -> RunReport:
        return run_scenario(lab_dir / f"{stem}.json")

    return run
