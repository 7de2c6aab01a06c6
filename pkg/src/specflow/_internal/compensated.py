"""Neumaier-compensated running sums with an error bound."""

from __future__ import annotations

from dataclasses import dataclass


_UNIT_ROUNDOFF = 2.0**-53


@dataclass
class CompensatedSum:
    """Running sum that tracks the lost low-order part and an error bound."""

    total: float = 0.0
    compensation: float = 0.0
    abs_total: float = 0.0
    count: int = 0

    def add(self, value: float) -> float:
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.compensation += (self.total - t) + value
        else:
            self.compensation += (value - t) + self.total
        self.total = t
        self.abs_total += abs(value)
        self.count += 1
        return self.value

    @property
    def value(self) -> float:
        return self.total + self.compensation

    @property
    def error_bound(self) -> float:
        # Neumaier: |err| <= 2u|S| + O(n u^2) sum|x_i|
        u = _UNIT_ROUNDOFF
        return 2.0 * u * abs(self.value) + 2.0 * self.count * u * u * self.abs_total
