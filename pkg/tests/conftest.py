"""Shared pytest configuration and fixtures."""

from __future__ import annotations

import os
from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from specflow.config import PRECISION_ENV_VAR, PROJECT_DIR_ENV_VAR, reset_config
from specflow.core.cf_engine import cf_expand, parse_quadratic
from specflow.core.roof_algebra import ACComponent, RoofFunction

from .helpers import GOLDEN, SILVER


if TYPE_CHECKING:
    from collections.abc import Generator

    from specflow.models.domain import ContinuedFraction


SLOW_ENV_VAR = "SPECFLOW_RUN_SLOW"


def pytest_configure(config: pytest.Config) -> None:
    """Register custom markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "e2e: end-to-end acceptance runs")


def pytest_collection_modifyitems(
    config: pytest.Config,
    items: list[pytest.Item],
) -> None:
    """Skip slow tests unless SPECFLOW_RUN_SLOW=1."""
    if os.environ.get(SLOW_ENV_VAR) == "1":
        return
    skip_marker = pytest.mark.skip(reason=f"set {SLOW_ENV_VAR}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_marker)


@pytest.fixture(autouse=True)
def isolated_config(
    tmp_path_factory: pytest.TempPathFactory, monkeypatch: pytest.MonkeyPatch
) -> Generator[None, None, None]:
    """Every test starts from defaults, not the checkout's pyproject.toml."""
    monkeypatch.setenv(PROJECT_DIR_ENV_VAR, str(tmp_path_factory.mktemp("project")))
    monkeypatch.delenv(PRECISION_ENV_VAR, raising=False)
    reset_config()
    yield
    reset_config()


@pytest.fixture(scope="session")
def project_root() -> Path:
    return Path(__file__).parent.parent.absolute()


@pytest.fixture(scope="session")
def scenarios_dir(project_root: Path) -> Path:
    return project_root / "scenarios"


@pytest.fixture
def golden() -> ContinuedFraction:
    """(√5 − 1)/2 = [0; 1, 1, 1, ...], C = 2."""
    return cf_expand(parse_quadratic(GOLDEN), 30)


@pytest.fixture
def silver() -> ContinuedFraction:
    """√2 − 1 = [0; 2, 2, 2, ...], C = 3."""
    return cf_expand(parse_quadratic(SILVER), 30)


@pytest.fixture
def sawtooth(golden: ContinuedFraction) -> RoofFunction:
    """f(x) = 1 + 0.5{x}."""
    return RoofFunction.from_jumps([("0", 0.5)], constant=1.0, bits=golden.bits)


@pytest.fixture
def three_jump(golden: ContinuedFraction) -> RoofFunction:
    return RoofFunction.from_jumps(
        [("0", 0.5), ("1/3", 0.2), ("5/7", 0.01)], constant=1.0, bits=golden.bits
    )


@pytest.fixture
def tent_roof(golden: ContinuedFraction) -> RoofFunction:
    """Two jumps plus a zero-mean tent."""
    return RoofFunction.from_jumps(
        [("1/3", 0.4), ("0.7", -0.1)],
        constant=1.2,
        ac=ACComponent.tent(0.2),
        bits=golden.bits,
    )
