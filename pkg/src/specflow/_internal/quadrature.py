"""Cached Gauss–Legendre rules."""

from __future__ import annotations

from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np


if TYPE_CHECKING:
    from specflow.types import FloatArray


MAX_ORDER = 256


@lru_cache(maxsize=128)
def gauss_legendre(order: int) -> tuple[FloatArray, FloatArray]:
    """Nodes and weights on [0, 1] for the given order."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x = (nodes + 1.0) / 2.0
    w = weights / 2.0
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def cell_order(phase_rate: float, width: float) -> int:
    """Gauss order resolving a phase that turns at ``phase_rate`` rad per unit."""
    return max(4, int(np.ceil(abs(phase_rate) * width)) + 4)
