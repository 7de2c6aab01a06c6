"""Public type aliases."""

from __future__ import annotations

from typing import Any, Literal, TypeAlias

import numpy as np
import numpy.typing as npt


FloatArray: TypeAlias = npt.NDArray[np.float64]
RawArray: TypeAlias = npt.NDArray[np.uint64]

# Fixed-point numerator of a circle position over 2**bits.
RawPosition: TypeAlias = int

JsonDict: TypeAlias = dict[str, Any]

ExperimentKind = Literal[
    "cf",
    "gaps",
    "birkhoff",
    "dk",
    "ratner",
    "mixing",
    "rigidity",
    "distribution",
    "stability",
]

PlotKind = Literal[
    "drift", "mixing", "rigidity", "dk", "distribution", "gaps", "birkhoff"
]

OutputFormat = Literal["json", "csv", "both"]

# Exit status reported by the CLI, ordered by severity.
ExitCode = Literal[0, 2, 3, 4, 5]
