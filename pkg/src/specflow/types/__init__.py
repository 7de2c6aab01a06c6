"""Public type definitions."""

from __future__ import annotations

from .aliases import (
    ExitCode,
    ExperimentKind,
    FloatArray,
    JsonDict,
    OutputFormat,
    PlotKind,
    RawArray,
    RawPosition,
)
from .protocols import Serializable, TabularReport


__all__ = [
    "ExitCode",
    "ExperimentKind",
    "FloatArray",
    "JsonDict",
    "OutputFormat",
    "PlotKind",
    "RawArray",
    "RawPosition",
    "Serializable",
    "TabularReport",
]
