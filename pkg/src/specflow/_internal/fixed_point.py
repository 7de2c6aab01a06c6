"""Fixed-point circle arithmetic.

A circle position is an integer numerator over 2**bits. Addition mod 1 is
integer addition masked to ``bits``, so orbits accumulate no rounding. The
vectorized helpers truncate to 64 bits and rely on uint64 wraparound.
"""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np


if TYPE_CHECKING:
    from specflow.types import FloatArray, RawArray


_UINT64_BITS = 64


def mask(bits: int) -> int:
    return (1 << bits) - 1


def from_fraction(value: Fraction, bits: int) -> int:
    """Floor of {value}·2**bits."""
    scaled = value * (1 << bits)
    return (scaled.numerator // scaled.denominator) & mask(bits)


def from_float(value: float, bits: int) -> int:
    return from_fraction(Fraction(value), bits)


def to_float(raw: int, bits: int) -> float:
    # int / int is correctly rounded; clamp the rare round-up to 1.0
    value = raw / (1 << bits)
    return value if value < 1.0 else float(np.nextafter(1.0, 0.0))


def to_fraction(raw: int, bits: int) -> Fraction:
    return Fraction(raw, 1 << bits)


def arc(x: int, y: int, bits: int) -> int:
    """Length of the positively oriented arc from x to y, in raw units."""
    return (y - x) & mask(bits)


def circle_distance(x: int, y: int, bits: int) -> int:
    d = arc(x, y, bits)
    return min(d, (1 << bits) - d)


def to_decimal_string(raw: int, bits: int) -> str:
    """Exact decimal expansion of raw/2**bits (terminates after ``bits`` digits)."""
    if raw == 0:
        return "0"
    digits = str(raw * 5**bits).rjust(bits, "0").rstrip("0")
    return f"0.{digits}"


def from_decimal_string(text: str, bits: int) -> int:
    return from_fraction(Fraction(text), bits)


def rescale(raw: int, from_bits: int, to_bits: int) -> int:
    if to_bits >= from_bits:
        return raw << (to_bits - from_bits)
    return raw >> (from_bits - to_bits)


def to_uint64(raw: int, bits: int) -> np.uint64:
    return np.uint64(rescale(raw, bits, _UINT64_BITS))


def orbit64(start: int, step: int, n: int, bits: int) -> RawArray:
    """Positions start + k·step for 0 <= k < n, truncated to 64 bits."""
    k = np.arange(n, dtype=np.uint64)
    return k * to_uint64(step, bits) + to_uint64(start, bits)


def unit_interval(values: RawArray) -> FloatArray:
    """Map uint64 numerators to floats in [0, 1) without rounding up to 1."""
    return (values >> np.uint64(11)).astype(np.float64) * 2.0**-53
