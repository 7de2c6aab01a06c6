"""Domain models using dataclasses.

Values here are immutable after construction and safe to share between
threads and processes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import mpmath

from specflow._internal import fixed_point
from specflow.config import get_config
from specflow.errors import InsufficientDepthError, InvalidInputError


if TYPE_CHECKING:
    from specflow.types import JsonDict


# ──────────────────────────────────────────────────────────────
# Circle points
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True, order=True)
class CirclePoint:
    """A point of the circle as ``raw / 2**bits``."""

    raw: int
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 1:
            raise InvalidInputError("circle point", f"bits={self.bits}")
        if not 0 <= self.raw < (1 << self.bits):
            raise InvalidInputError("circle point", f"raw={self.raw} out of range")

    @classmethod
    def zero(cls, bits: int | None = None) -> CirclePoint:
        return cls(0, bits or get_config().precision_bits)

    @classmethod
    def from_float(cls, value: float, bits: int | None = None) -> CirclePoint:
        bits = bits or get_config().precision_bits
        return cls(fixed_point.from_float(value, bits), bits)

    @classmethod
    def from_fraction(cls, value: Fraction, bits: int | None = None) -> CirclePoint:
        bits = bits or get_config().precision_bits
        return cls(fixed_point.from_fraction(value, bits), bits)

    @classmethod
    def parse(cls, text: str, bits: int | None = None) -> CirclePoint:
        """Parse "p/q" or a decimal string."""
        try:
            value = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError("circle point literal", repr(text)) from exc
        return cls.from_fraction(value, bits)

    @property
    def position(self) -> float:
        return fixed_point.to_float(self.raw, self.bits)

    def to_fraction(self) -> Fraction:
        return fixed_point.to_fraction(self.raw, self.bits)

    def to_decimal(self) -> str:
        return fixed_point.to_decimal_string(self.raw, self.bits)

    def _check(self, other: CirclePoint) -> None:
        if other.bits != self.bits:
            raise InvalidInputError(
                "circle arithmetic", f"mixed precisions {self.bits} and {other.bits}"
            )

    def __add__(self, other: CirclePoint) -> CirclePoint:
        self._check(other)
        raw = (self.raw + other.raw) & fixed_point.mask(self.bits)
        return CirclePoint(raw, self.bits)

    def __sub__(self, other: CirclePoint) -> CirclePoint:
        self._check(other)
        raw = (self.raw - other.raw) & fixed_point.mask(self.bits)
        return CirclePoint(raw, self.bits)

    def __neg__(self) -> CirclePoint:
        return CirclePoint((-self.raw) & fixed_point.mask(self.bits), self.bits)

    def shifted(self, raw_step: int, times: int = 1) -> CirclePoint:
        return CirclePoint(
            (self.raw + raw_step * times) & fixed_point.mask(self.bits), self.bits
        )

    def distance(self, other: CirclePoint) -> float:
        """‖self − other‖ on the circle."""
        self._check(other)
        return fixed_point.to_float(
            fixed_point.circle_distance(self.raw, other.raw, self.bits), self.bits
        )


# ──────────────────────────────────────────────────────────────
# Quadratic irrationals and continued fractions
# ──────────────────────────────────────────────────────────────
_QUADRATIC_RE = re.compile(
    r"^\s*\(?\s*(?P<a>[+-]?\d+)?\s*(?P<sign>[+-])?\s*sqrt\(\s*(?P<b>\d+)\s*\)\s*\)?"
    r"\s*(?:/\s*(?P<c>[+-]?\d+))?\s*$"
)
_ROOT_FIRST_RE = re.compile(
    r"^\s*\(?\s*sqrt\(\s*(?P<b>\d+)\s*\)\s*(?P<a>[+-]\s*\d+)?\s*\)?"
    r"\s*(?:/\s*(?P<c>[+-]?\d+))?\s*$"
)


def _divisors_desc(n: int) -> list[int]:
    return [d for d in range(n, 1, -1) if n % d == 0]


@dataclass(frozen=True)
class QuadraticIrrational:
    """The number (a + √b)/c in canonical form.

    Canonical means c > 0, c divides b − a², the value lies in (0, 1) and no
    common factor can be removed while keeping the divisibility.
    """

    a: int
    b: int
    c: int

    def __post_init__(self) -> None:
        ok, reason = self.validate()
        if not ok:
            raise InvalidInputError("quadratic irrational", reason or "")

    def validate(self) -> tuple[bool, str | None]:
        if self.b <= 0:
            return False, f"b={self.b} must be positive"
        s = math.isqrt(self.b)
        if s * s == self.b:
            return False, f"b={self.b} is a perfect square (rational value)"
        if self.c <= 0:
            return False, f"c={self.c} must be positive"
        if (self.b - self.a * self.a) % self.c != 0:
            return False, "c must divide b - a^2; use QuadraticIrrational.normalized"
        if not 0 <= self.a + s < self.c:
            return False, "value not in (0, 1); use QuadraticIrrational.normalized"
        for g in _divisors_desc(math.gcd(self.a, self.c)):
            if self.b % (g * g) == 0 and ((self.b - self.a**2) // g**2) % (
                self.c // g
            ) == 0:
                return False, f"common factor {g} not removed"
        return True, None

    @classmethod
    def normalized(cls, a: int, b: int, c: int) -> QuadraticIrrational:
        """Bring (a + √b)/c into canonical form (fractional part taken)."""
        if c == 0:
            raise InvalidInputError("quadratic irrational", "c must be nonzero")
        if b <= 0 or math.isqrt(b) ** 2 == b:
            raise InvalidInputError(
                "quadratic irrational", f"b={b} is not a non-square"
            )
        if c < 0:
            # (a + √b)/c = (−a − √b)/|c| has the conjugate sign on √b
            raise InvalidInputError(
                "quadratic irrational", "negative denominator flips the root's sign"
            )
        if (b - a * a) % c != 0:
            a, b, c = a * c, b * c * c, c * c
        s = math.isqrt(b)
        a -= c * ((a + s) // c)
        for g in _divisors_desc(math.gcd(a, c)):
            if b % (g * g) == 0 and ((b - a * a) // (g * g)) % (c // g) == 0:
                a, b, c = a // g, b // (g * g), c // g
                break
        return cls(a, b, c)

    @classmethod
    def parse(cls, text: str) -> QuadraticIrrational:
        """Parse "(a+sqrt(b))/c", "a+sqrt(b)" or "sqrt(b)/c"."""
        root_first = _ROOT_FIRST_RE.match(text)
        if root_first is not None:
            a = int((root_first.group("a") or "0").replace(" ", ""))
            b = int(root_first.group("b"))
            c = int(root_first.group("c") or 1)
            return cls.normalized(a, b, c)
        match = _QUADRATIC_RE.match(text)
        if match is None:
            raise InvalidInputError("quadratic irrational literal", repr(text))
        if match.group("a") is not None and match.group("sign") is None:
            raise InvalidInputError("quadratic irrational literal", repr(text))
        if match.group("sign") == "-":
            raise InvalidInputError(
                "quadratic irrational literal", "write the root with a + sign"
            )
        a = int(match.group("a") or 0)
        b = int(match.group("b"))
        c = int(match.group("c") or 1)
        return cls.normalized(a, b, c)

    def fixed(self, bits: int) -> int:
        """floor(value · 2**bits), from the integer square root."""
        root = math.isqrt(self.b << (2 * bits))
        return ((self.a << bits) + root) // self.c

    def to_mpf(self, bits: int) -> mpmath.mpf:
        with mpmath.workprec(bits + 32):
            return (self.a + mpmath.sqrt(self.b)) / self.c

    def __str__(self) -> str:
        return f"({self.a}+sqrt({self.b}))/{self.c}"


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients a_1..a_depth with exact convergents p_n/q_n, n = 0..depth.

    ``alpha_raw`` is α at ``bits`` fixed-point precision; rotation orbits use
    it directly.
    """

    quotients: tuple[int, ...]
    numerators: tuple[int, ...]
    denominators: tuple[int, ...]
    alpha_raw: int
    bits: int
    source: QuadraticIrrational | None = None
    period_start: int | None = None
    period_length: int | None = None
    low_precision: bool = False
    float_value: float | None = field(default=None, compare=False)

    @property
    def depth(self) -> int:
        return len(self.quotients)

    @property
    def C(self) -> int:
        return max(self.quotients) + 1

    @property
    def alpha(self) -> CirclePoint:
        return CirclePoint(self.alpha_raw, self.bits)

    @property
    def value(self) -> float:
        if self.float_value is not None:
            return self.float_value
        return fixed_point.to_float(self.alpha_raw, self.bits)

    @property
    def is_periodic(self) -> bool:
        return self.period_length is not None

    def q(self, n: int) -> int:
        if not 0 <= n < len(self.denominators):
            raise InsufficientDepthError(required=n, available=self.depth)
        return self.denominators[n]

    def p(self, n: int) -> int:
        if not 0 <= n < len(self.numerators):
            raise InsufficientDepthError(required=n, available=self.depth)
        return self.numerators[n]

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p(n), self.q(n))

    def to_dict(self) -> JsonDict:
        return {
            "alpha": str(self.source) if self.source else repr(self.value),
            "low_precision": self.low_precision,
            "bits": self.bits,
            "quotients": list(self.quotients),
            "convergents": [
                [str(p), str(q)]
                for p, q in zip(self.numerators, self.denominators, strict=True)
            ],
            "period_start": self.period_start,
            "period_length": self.period_length,
            "C": self.C,
        }


# ──────────────────────────────────────────────────────────────
# Jumps
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Jump:
    """One sawtooth term d·{x − β}."""

    beta: CirclePoint
    d: float
    rational: Fraction | None = None

    def __post_init__(self) -> None:
        if self.d == 0 or not math.isfinite(self.d):
            raise InvalidInputError("jump", f"d={self.d} must be finite and nonzero")

    def beta_label(self) -> str:
        if self.rational is not None:
            return f"{self.rational.numerator}/{self.rational.denominator}"
        return self.beta.to_decimal()


@dataclass(frozen=True)
class JumpSpec:
    """Jumps ordered by non-increasing |d|, plus a bound on omitted ones."""

    entries: tuple[Jump, ...] = ()
    tail_bound: float = 0.0

    def __post_init__(self) -> None:
        if self.tail_bound < 0 or not math.isfinite(self.tail_bound):
            raise InvalidInputError("jump tail", f"tail_bound={self.tail_bound}")
        betas = [j.beta.raw for j in self.entries]
        if len(set(betas)) != len(betas):
            raise InvalidInputError("jumps", "positions must be pairwise distinct")
        sizes = [abs(j.d) for j in self.entries]
        if any(b > a for a, b in zip(sizes, sizes[1:], strict=False)):
            raise InvalidInputError("jumps", "|d| must be non-increasing")

    @classmethod
    def ordered(
        cls, jumps: tuple[Jump, ...] | list[Jump], tail_bound: float = 0.0
    ) -> JumpSpec:
        """Sort by non-increasing |d|; ties keep their position order."""
        return cls(
            tuple(sorted(jumps, key=lambda j: (-abs(j.d), j.beta.raw))), tail_bound
        )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> float:
        """S = Σ d_i over the materialized jumps."""
        return math.fsum(j.d for j in self.entries)

    @property
    def abs_total(self) -> float:
        return math.fsum(abs(j.d) for j in self.entries)

    def tail_after(self, j: int) -> float:
        """Σ_{i>j} |d_i| + tail_bound."""
        return math.fsum(abs(x.d) for x in self.entries[j:]) + self.tail_bound

    def head(self, j: int) -> JumpSpec:
        """The j largest jumps, exactly (no tail)."""
        return JumpSpec(self.entries[:j], 0.0)


@dataclass(frozen=True)
class SpecialFlowPoint:
    """A point (x, s) under the graph of the roof."""

    x: CirclePoint
    s: float
