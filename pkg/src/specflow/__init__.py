"""specflow: numerics for special flows over irrational rotations."""

from __future__ import annotations


__version__ = "0.1.0"

from specflow.config import LabConfig, get_config  # noqa: E402
from specflow.errors import SpecflowError  # noqa: E402


__all__ = ["LabConfig", "SpecflowError", "__version__", "get_config"]
