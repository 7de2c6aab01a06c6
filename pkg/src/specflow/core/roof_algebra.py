"""Roof functions: sawtooth jumps + absolutely continuous part + constant.

A roof is f(x) = c + Σ d_i·{x − β_i} + g(x) with g continuous and piecewise
polynomial. {·} is the usual fractional part, so f is right-continuous and
the circle jump of f at β_i is −d_i. All jump combinatorics below work with
the sawtooth coefficients d_i directly.
"""

from __future__ import annotations

import bisect
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from numpy.polynomial import Polynomial

from specflow._internal import fixed_point
from specflow.config import get_config
from specflow.errors import (
    ConsistencyError,
    EnumerationCapError,
    HypothesisError,
    InvalidInputError,
    TruncationError,
)
from specflow.models.domain import CirclePoint, ContinuedFraction, Jump, JumpSpec
from specflow.models.reports import StabilityCertificate


if TYPE_CHECKING:
    from specflow.types import FloatArray, JsonDict, RawArray


log = structlog.get_logger()

_BREAKPOINT_MERGE = 1e-15
_DEDUP_TOL = 1e-12


# ──────────────────────────────────────────────────────────────
# Piecewise-polynomial continuous part
# ──────────────────────────────────────────────────────────────
def _abs_integral(poly: Polynomial, a: float, b: float) -> float:
    """∫_a^b |poly(t)| dt via sign changes at real roots."""
    poly = poly.trim()
    if b <= a:
        return 0.0
    if poly.degree() < 1:
        return abs(float(poly.coef[0])) * (b - a)
    cuts = [a]
    for root in poly.roots():
        if abs(root.imag) < 1e-12 and a < root.real < b:
            cuts.append(float(root.real))
    cuts.append(b)
    cuts.sort()
    anti = poly.integ()
    pairs = zip(cuts, cuts[1:], strict=False)
    return math.fsum(abs(float(anti(hi) - anti(lo))) for lo, hi in pairs)


def _poly_extremes(poly: Polynomial, width: float) -> tuple[float, float]:
    """Min and max of poly on [0, width]."""
    poly = poly.trim()
    candidates = [0.0, width]
    if poly.degree() >= 2:
        for root in poly.deriv().roots():
            if abs(root.imag) < 1e-12 and 0.0 < root.real < width:
                candidates.append(float(root.real))
    values = [float(poly(t)) for t in candidates]
    return min(values), max(values)


@dataclass(frozen=True)
class ACComponent:
    """Continuous piecewise polynomial on the circle.

    Piece j lives on [b_j, b_{j+1}) (the last on [b_last, 1)) and is stored
    as ascending coefficients in the local variable t = x − b_j.
    """

    breakpoints: tuple[float, ...] = (0.0,)
    coefficients: tuple[tuple[float, ...], ...] = ((0.0,),)

    def __post_init__(self) -> None:
        bps = self.breakpoints
        if not bps or bps[0] != 0.0:
            raise InvalidInputError("ac breakpoints", "must start at 0")
        if any(b <= a for a, b in zip(bps, bps[1:], strict=False)) or bps[-1] >= 1.0:
            raise InvalidInputError(
                "ac breakpoints", "must increase strictly inside [0, 1)"
            )
        if len(self.coefficients) != len(bps):
            raise InvalidInputError("ac coefficients", "one coefficient list per piece")
        if any(len(c) == 0 for c in self.coefficients):
            raise InvalidInputError("ac coefficients", "empty piece")
        scale = 1.0 + max(abs(v) for c in self.coefficients for v in c)
        for j, poly in enumerate(self.pieces):
            nxt = self.pieces[(j + 1) % len(self.pieces)]
            if abs(float(poly(self.widths[j])) - float(nxt(0.0))) > 1e-9 * scale:
                raise InvalidInputError(
                    "ac component", f"discontinuous at breakpoint {j + 1}"
                )

    @classmethod
    def zero(cls) -> ACComponent:
        return cls()

    @classmethod
    def tent(cls, height: float) -> ACComponent:
        """Zero-mean tent: −h/2 at 0, +h/2 at 1/2."""
        return cls((0.0, 0.5), ((-height / 2, 2 * height), (height / 2, -2 * height)))

    @classmethod
    def cubic_bump(cls, amplitude: float) -> ACComponent:
        """amplitude·x(1 − x)(1 − 2x): zero mean, vanishing at 0 and 1/2."""
        return cls((0.0,), ((0.0, amplitude, -3 * amplitude, 2 * amplitude),))

    @cached_property
    def pieces(self) -> tuple[Polynomial, ...]:
        return tuple(Polynomial(c) for c in self.coefficients)

    @cached_property
    def widths(self) -> tuple[float, ...]:
        ends = (*self.breakpoints[1:], 1.0)
        return tuple(e - b for b, e in zip(self.breakpoints, ends, strict=True))

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for c in self.coefficients for v in c)

    def _locate(self, x: float) -> tuple[int, float]:
        j = bisect.bisect_right(self.breakpoints, x) - 1
        return j, x - self.breakpoints[j]

    def __call__(self, x: float) -> float:
        if self.is_zero:
            return 0.0
        j, t = self._locate(x % 1.0)
        return float(self.pieces[j](t))

    def evaluate_array(self, xs: FloatArray) -> FloatArray:
        out = np.zeros_like(xs, dtype=np.float64)
        if self.is_zero:
            return out
        bps = np.asarray(self.breakpoints)
        idx = np.searchsorted(bps, xs, side="right") - 1
        for j, poly in enumerate(self.pieces):
            sel = idx == j
            if np.any(sel):
                out[sel] = np.polynomial.polynomial.polyval(xs[sel] - bps[j], poly.coef)
        return out

    def mean(self) -> float:
        return math.fsum(
            float(p.integ()(w)) for p, w in zip(self.pieces, self.widths, strict=True)
        )

    def derivative_l1(self) -> float:
        """‖g′‖ in L¹."""
        return math.fsum(
            _abs_integral(p.deriv(), 0.0, w)
            for p, w in zip(self.pieces, self.widths, strict=True)
        )

    def shifted_derivative_l1(self, slope: float) -> float:
        """∫ |slope + g′|, the continuous part of the variation of a roof."""
        return math.fsum(
            _abs_integral(p.deriv() + slope, 0.0, w)
            for p, w in zip(self.pieces, self.widths, strict=True)
        )

    def derivative_variation(self) -> float:
        """Total variation of g′ around the circle."""
        inner = math.fsum(
            _abs_integral(p.deriv(2), 0.0, w)
            for p, w in zip(self.pieces, self.widths, strict=True)
        )
        jumps = math.fsum(
            abs(
                float(self.pieces[(j + 1) % len(self.pieces)].deriv()(0.0))
                - float(p.deriv()(w))
            )
            for j, (p, w) in enumerate(zip(self.pieces, self.widths, strict=True))
        )
        return inner + jumps

    def max_abs_derivative(self) -> float:
        best = 0.0
        for p, w in zip(self.pieces, self.widths, strict=True):
            lo, hi = _poly_extremes(p.deriv(), w)
            best = max(best, abs(lo), abs(hi))
        return best

    def add_constant(self, value: float) -> ACComponent:
        coeffs = tuple((c[0] + value, *c[1:]) for c in self.coefficients)
        return ACComponent(self.breakpoints, coeffs)

    def scaled(self, factor: float) -> ACComponent:
        return ACComponent(
            self.breakpoints,
            tuple(tuple(v * factor for v in c) for c in self.coefficients),
        )

    def _rebased(self, start: float) -> Polynomial:
        j, shift = self._locate(start)
        return self.pieces[j](Polynomial([shift, 1.0]))

    def __add__(self, other: ACComponent) -> ACComponent:
        merged: list[float] = []
        for b in sorted({*self.breakpoints, *other.breakpoints}):
            if not merged or b - merged[-1] > _BREAKPOINT_MERGE:
                merged.append(b)
        coeffs = []
        for b in merged:
            poly = self._rebased(b) + other._rebased(b)  # noqa: SLF001
            coeffs.append(tuple(float(v) for v in poly.coef))
        return ACComponent(tuple(merged), tuple(coeffs))

    def to_dict(self) -> JsonDict:
        return {
            "breakpoints": list(self.breakpoints),
            "coefficients": [list(c) for c in self.coefficients],
        }


# ──────────────────────────────────────────────────────────────
# Roof functions
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class RoofFunction:
    """c + Σ d_i·{x − β_i} + g(x), an element of the class 𝒱.

    Construction does not require positivity; roofs of special flows call
    ``require_positive``.
    """

    jumps: JumpSpec = field(default_factory=JumpSpec)
    ac: ACComponent = field(default_factory=ACComponent)
    constant: float = 0.0

    def __post_init__(self) -> None:
        bits = {j.beta.bits for j in self.jumps.entries}
        if len(bits) > 1:
            raise InvalidInputError("roof", "jump positions use mixed precisions")

    # construction helpers
    @classmethod
    def constant_roof(cls, value: float) -> RoofFunction:
        return cls(constant=value)

    @classmethod
    def from_jumps(
        cls,
        jumps: Iterable[tuple[str | Fraction | float, float]],
        *,
        constant: float = 0.0,
        ac: ACComponent | None = None,
        tail_bound: float = 0.0,
        bits: int | None = None,
    ) -> RoofFunction:
        """Build from (β, d) pairs; β as "p/q", decimal string, Fraction or float."""
        bits = bits or get_config().precision_bits
        entries = []
        for beta, d in jumps:
            rational: Fraction | None = None
            if isinstance(beta, str):
                point = CirclePoint.parse(beta, bits)
                rational = Fraction(beta.strip())
            elif isinstance(beta, Fraction):
                point = CirclePoint.from_fraction(beta, bits)
                rational = beta
            else:
                point = CirclePoint.from_float(beta, bits)
            entries.append(Jump(point, float(d), rational))
        spec = JumpSpec.ordered(entries, tail_bound)
        return cls(spec, ac or ACComponent.zero(), constant)

    # basic quantities
    @property
    def S(self) -> float:
        """Sum of the materialized sawtooth coefficients."""
        return self.jumps.total

    @property
    def abs_S_lower(self) -> float:
        """Lower bound for |S| accounting for the unmaterialized tail."""
        return max(abs(self.S) - self.jumps.tail_bound, 0.0)

    @property
    def bits(self) -> int:
        if self.jumps.entries:
            return self.jumps.entries[0].beta.bits
        return get_config().precision_bits

    @property
    def in_class_u(self) -> bool:
        return self.abs_S_lower > 0.0

    def integral(self) -> float:
        return self.constant + 0.5 * self.S + self.ac.mean()

    # evaluation
    def _frac(self, x: CirclePoint, beta: CirclePoint) -> float:
        raw = (x.raw - beta.raw) & fixed_point.mask(x.bits)
        return fixed_point.to_float(raw, x.bits)

    def evaluate(self, x: CirclePoint, tolerance: float | None = None) -> float:
        """f(x); the truncated tail may move the true value by tail_bound."""
        if tolerance is not None and self.jumps.tail_bound > tolerance:
            raise TruncationError(requested=tolerance, achievable=self.jumps.tail_bound)
        if self.jumps.entries and x.bits != self.bits:
            raise InvalidInputError("point", "precision differs from the roof's")
        total = math.fsum(j.d * self._frac(x, j.beta) for j in self.jumps.entries)
        return self.constant + total + self.ac(x.position)

    def evaluate_left(self, x: CirclePoint) -> float:
        """Left limit f(x⁻)."""
        terms = []
        for j in self.jumps.entries:
            terms.append(j.d if j.beta.raw == x.raw else j.d * self._frac(x, j.beta))
        return self.constant + math.fsum(terms) + self.ac(x.position)

    @cached_property
    def _beta64(self) -> RawArray:
        return np.array(
            [
                int(fixed_point.to_uint64(j.beta.raw, j.beta.bits))
                for j in self.jumps.entries
            ],
            dtype=np.uint64,
        )

    @cached_property
    def _d_array(self) -> FloatArray:
        return np.array([j.d for j in self.jumps.entries], dtype=np.float64)

    def evaluate_raw64(self, u: RawArray) -> FloatArray:
        """Vectorized f at 64-bit fixed-point positions."""
        out = np.full(u.shape, self.constant, dtype=np.float64)
        for beta, d in zip(self._beta64, self._d_array, strict=True):
            out += d * fixed_point.unit_interval(u - beta)
        if not self.ac.is_zero:
            out += self.ac.evaluate_array(fixed_point.unit_interval(u))
        return out

    def evaluate_many(self, raws: Sequence[int]) -> FloatArray:
        """f at exact fixed-point positions; jump sides are decided on all bits."""
        bits = self.bits
        m = fixed_point.mask(bits)
        shift = max(bits - 53, 0)
        scale = 2.0 ** -(bits - shift)
        out = np.full(len(raws), self.constant, dtype=np.float64)
        for j in self.jumps.entries:
            b = j.beta.raw
            frac = np.array([((r - b) & m) >> shift for r in raws], dtype=np.float64)
            out += j.d * (frac * scale)
        if not self.ac.is_zero:
            pos = np.array([r >> shift for r in raws], dtype=np.float64) * scale
            out += self.ac.evaluate_array(pos)
        return out

    # geometry of the graph
    def cell_starts(self) -> list[int]:
        """Sorted raw positions of all breakpoints (jumps and AC pieces) and 0."""
        bits = self.bits
        raws = {0, *(j.beta.raw for j in self.jumps.entries)}
        raws.update(fixed_point.from_float(b, bits) for b in self.ac.breakpoints)
        return sorted(raws)

    @cached_property
    def bounds(self) -> tuple[float, float]:
        """(inf f, sup f), widened by the jump tail bound."""
        bits = self.bits
        starts = self.cell_starts()
        ends = [*starts[1:], 1 << bits]
        lo, hi = math.inf, -math.inf
        for start, end in zip(starts, ends, strict=True):
            left = CirclePoint(start, bits)
            width = (end - start) / (1 << bits)
            base = self.constant + math.fsum(
                j.d * self._frac(left, j.beta) for j in self.jumps.entries
            )
            x0 = left.position
            poly = Polynomial([base, self.S]) + self.ac._rebased(x0)  # noqa: SLF001
            cell_lo, cell_hi = _poly_extremes(poly, width)
            lo, hi = min(lo, cell_lo), max(hi, cell_hi)
        tail = self.jumps.tail_bound
        return lo - tail, hi + tail

    @property
    def lower_bound(self) -> float:
        return self.bounds[0]

    @property
    def upper_bound(self) -> float:
        return self.bounds[1]

    def require_positive(self) -> None:
        if not self.lower_bound > 0.0:
            raise HypothesisError(
                "positive roof", f"inf f = {self.lower_bound:.6g} is not positive"
            )

    # variation
    def variation(self) -> float:
        """Circle variation Σ|d_i| + ∫|S + g′|, plus 2·tail_bound."""
        return (
            self.jumps.abs_total
            + self.ac.shifted_derivative_l1(self.S)
            + 2.0 * self.jumps.tail_bound
        )

    def variation_bound(self) -> float:
        """Σ|d_i| + ‖g′‖₁ + 2|S| (an upper bound for ``variation``)."""
        return (
            self.jumps.abs_total
            + self.jumps.tail_bound
            + self.ac.derivative_l1()
            + 2.0 * (abs(self.S) + self.jumps.tail_bound)
        )

    def derivative_variation(self) -> float:
        """Var f′ on the circle minus the jump points (f′ = S + g′)."""
        return self.ac.derivative_variation()

    # arithmetic
    def __add__(self, other: RoofFunction) -> RoofFunction:
        merged: dict[int, Jump] = {}
        for j in (*self.jumps.entries, *other.jumps.entries):
            prev = merged.get(j.beta.raw)
            if prev is None:
                merged[j.beta.raw] = j
                continue
            d = prev.d + j.d
            if d == 0.0:
                del merged[j.beta.raw]
            else:
                merged[j.beta.raw] = Jump(prev.beta, d, prev.rational or j.rational)
        return RoofFunction(
            JumpSpec.ordered(
                list(merged.values()),
                self.jumps.tail_bound + other.jumps.tail_bound,
            ),
            self.ac + other.ac,
            self.constant + other.constant,
        )

    def scaled(self, factor: float) -> RoofFunction:
        if factor == 0.0:
            return RoofFunction(constant=0.0)
        jumps = [Jump(j.beta, j.d * factor, j.rational) for j in self.jumps.entries]
        return RoofFunction(
            JumpSpec.ordered(jumps, self.jumps.tail_bound * abs(factor)),
            self.ac.scaled(factor),
            self.constant * factor,
        )

    def __neg__(self) -> RoofFunction:
        return self.scaled(-1.0)

    def __sub__(self, other: RoofFunction) -> RoofFunction:
        return self + (-other)

    def to_dict(self) -> JsonDict:
        return {
            "constant": self.constant,
            "jumps": [{"beta": j.beta_label(), "d": j.d} for j in self.jumps.entries],
            "ac": self.ac.to_dict(),
            "tail_bound": self.jumps.tail_bound,
        }


def roof_from_mapping(data: dict[str, Any], bits: int | None = None) -> RoofFunction:
    """Inverse of ``RoofFunction.to_dict``."""
    ac_data = data.get("ac")
    ac = (
        ACComponent(
            tuple(float(b) for b in ac_data["breakpoints"]),
            tuple(tuple(float(v) for v in c) for c in ac_data["coefficients"]),
        )
        if ac_data
        else ACComponent.zero()
    )
    return RoofFunction.from_jumps(
        [(str(j["beta"]), float(j["d"])) for j in data.get("jumps", [])],
        constant=float(data.get("constant", 0.0)),
        ac=ac,
        tail_bound=float(data.get("tail_bound", 0.0)),
        bits=bits,
    )


def partition_variation(f: RoofFunction, grid: int | None = None) -> float:
    """Variation by partition refinement: equispaced grid plus every breakpoint.

    At each jump both the left limit and the value are sampled, so the sum of
    absolute increments converges to the materialized variation.
    """
    grid = grid or get_config().variation_grid
    bits = f.bits
    full = 1 << bits
    jump_raws = {j.beta.raw for j in f.jumps.entries}
    raws = sorted({*(k * full // grid for k in range(grid)), *f.cell_starts()})
    values: list[float] = []
    for r in raws:
        x = CirclePoint(r, bits)
        if r in jump_raws:
            values.append(f.evaluate_left(x))
        values.append(f.evaluate(x))
    values.append(values[0])
    return math.fsum(abs(b - a) for a, b in zip(values, values[1:], strict=False))


# ──────────────────────────────────────────────────────────────
# Decomposition and density
# ──────────────────────────────────────────────────────────────
def decompose(f: RoofFunction) -> tuple[ACComponent, RoofFunction]:
    """Split f = f_ac + f_pl with f_ac zero-mean and f_pl′ = S off the jumps."""
    mean = f.ac.mean()
    f_ac = f.ac.add_constant(-mean)
    f_pl = RoofFunction(f.jumps, ACComponent.zero(), f.constant + mean)
    return f_ac, f_pl


def von_neumann_threshold(f: RoofFunction) -> int:
    """Smallest n₀ with 1/(3n₀) < |S|, past which truncations keep S_n ≠ 0."""
    if not f.in_class_u:
        raise HypothesisError("S != 0", "sum of jumps vanishes")
    return math.floor(1.0 / (3.0 * f.abs_S_lower)) + 1


def von_neumann_approx(f: RoofFunction, n: int) -> RoofFunction:
    """Keep the j_n largest jumps with Σ_{i>j_n}|d_i| < 1/(3n).

    Then Var(f − f_n) <= 2·tail < 1/n and |S − S_n| < 1/(3n).
    """
    if n < 1:
        raise InvalidInputError("n", f"{n} < 1")
    if not f.in_class_u:
        raise HypothesisError("S != 0", "sum of jumps vanishes; f is not in U")
    target = 1.0 / (3.0 * n)
    if f.jumps.tail_bound >= target:
        raise TruncationError(requested=target, achievable=f.jumps.tail_bound)
    j = next(j for j in range(len(f.jumps) + 1) if f.jumps.tail_after(j) < target)
    f_n = RoofFunction(f.jumps.head(j), f.ac, f.constant)
    if f_n.S == 0.0:
        raise HypothesisError(
            "S_n != 0",
            f"truncation at n={n} cancels; use n >= {von_neumann_threshold(f)}",
        )
    log.debug("von_neumann_truncation", n=n, kept=j, tail=f.jumps.tail_after(j))
    return f_n


# ──────────────────────────────────────────────────────────────
# Jump combinatorics
# ──────────────────────────────────────────────────────────────
def _window_size(C: int, j: int) -> int:
    return (2 * C + 1) * ((2 * C + 1) ** j + 1)


def theta_at(f: RoofFunction, C: int, j: int) -> float | None:
    """Largest θ (capped) with tail_j <= |S|/((2+θ)(2C+1)((2C+1)^j+1)), or None."""
    theta_max = get_config().theta_max
    tail = f.jumps.tail_after(j)
    s = f.abs_S_lower
    if s <= 0.0:
        return None
    if tail == 0.0:
        return theta_max
    size = _window_size(C, j)
    if size.bit_length() > 1000:
        return None
    theta = s / (tail * float(size)) - 2.0
    if theta <= 0.0:
        return None
    return min(theta, theta_max)


def theta_condition(f: RoofFunction, C: int) -> tuple[int, float] | None:
    """Smallest j (jumps in non-increasing |d| order) satisfying (θ), with its θ."""
    if C < 1:
        raise InvalidInputError("C", f"{C} < 1")
    if not f.in_class_u:
        raise HypothesisError("S != 0", "sum of jumps vanishes; f is not in U")
    for j in range(1, len(f.jumps) + 1):
        theta = theta_at(f, C, j)
        if theta is not None:
            return j, theta
    return None


@dataclass(frozen=True)
class DriftSet:
    """A = {Σ_{i<=j} m_i d_i : 0 <= m_i < 2C+1} and the tail radius ξ."""

    values: tuple[float, ...]
    xi: float
    j: int
    theta: float
    C: int

    def symmetric(self) -> tuple[float, ...]:
        """A ∪ −A, sorted."""
        return tuple(sorted({*self.values, *(-v for v in self.values)}))

    def distance_to(self, value: float) -> float:
        arr = np.asarray(self.values)
        return float(np.min(np.abs(arr - value)))


def _dedup(values: FloatArray) -> FloatArray:
    values = np.sort(values)
    if values.size == 0:
        return values
    apart = np.diff(values) > _DEDUP_TOL * (1.0 + np.abs(values[1:]))
    keep = np.concatenate(([True], apart))
    return values[keep]


def jump_sum_set_D(f: RoofFunction, C: int, j_trunc: int) -> DriftSet:
    """Enumerate A for the first ``j_trunc`` jumps; D ⊂ A + (−ξ, ξ)."""
    theta = theta_at(f, C, j_trunc)
    if theta is None:
        raise HypothesisError("theta condition", f"fails at j={j_trunc} for C={C}")
    cap = get_config().enumeration_cap
    size = (2 * C + 1) ** j_trunc
    if size > cap:
        raise EnumerationCapError(size=size, cap=cap)
    multiples = np.arange(2 * C + 1, dtype=np.float64)
    acc = np.zeros(1)
    for jump in f.jumps.entries[:j_trunc]:
        acc = _dedup((acc[:, None] + jump.d * multiples[None, :]).ravel())
    xi = f.abs_S_lower / ((2.0 + theta) * float(_window_size(C, j_trunc)))
    return DriftSet(tuple(float(v) for v in acc), xi, j_trunc, theta, C)


@dataclass(frozen=True)
class DriftWindow:
    """Midpoint p and radius η of a window (p − η, p + η) ⊂ (0, |S|) avoiding D ∪ −D."""

    p: float
    eta: float
    gap: tuple[float, float]
    drift_set: DriftSet


def drift_window(f: RoofFunction, C: int) -> DriftWindow:
    """Largest gap of (A ∪ −A) in (0, |S|); p its midpoint, η within the cap."""
    found = theta_condition(f, C)
    if found is None:
        raise HypothesisError("theta condition", f"no feasible j for C={C}")
    j, theta = found
    dset = jump_sum_set_D(f, C, j)
    s = abs(f.S)
    inner = [v for v in dset.symmetric() if 0.0 < v < s]
    edges = [0.0, *inner, s]
    a, b = max(
        zip(edges, edges[1:], strict=False), key=lambda ab: (ab[1] - ab[0], -ab[0])
    )
    p = (a + b) / 2.0
    cap = f.abs_S_lower * theta / (2.0 * (2.0 + theta) * ((2 * C + 1) ** j + 1))
    room = (b - a) / 2.0 - dset.xi
    eta = min(cap, room) * (1.0 - 1e-9)
    if eta <= 0.0:
        raise HypothesisError("drift window", "gap too narrow for the tail radius")
    log.debug("drift_window", p=p, eta=eta, j=j, theta=theta, xi=dset.xi)
    return DriftWindow(p, eta, (a, b), dset)


def interval_derivative_integral(
    f: RoofFunction, a: CirclePoint, b: CirclePoint
) -> float:
    """∫_a^b f′ computed two ways (b with raw 0 stands for 1).

    Route one integrates S + g′; route two takes f(b⁻) − f(a⁺) and adds back
    the sawtooth drops d_i of the jumps strictly inside (a, b).
    """
    bits = f.bits
    b_end = b.raw if b.raw != 0 else 1 << bits
    if not a.raw < b_end:
        raise InvalidInputError("interval", "need a < b inside [0, 1]")
    length = (b_end - a.raw) / (1 << bits)
    b_pos = b.position if b.raw != 0 else 1.0
    via_derivative = f.ac(b_pos) - f.ac(a.position) + f.S * length
    inside = math.fsum(j.d for j in f.jumps.entries if a.raw < j.beta.raw < b_end)
    via_endpoints = f.evaluate_left(b) - f.evaluate(a) + inside
    tol = 1e-10 * (1.0 + f.jumps.abs_total + abs(f.constant))
    if abs(via_derivative - via_endpoints) > tol:
        raise ConsistencyError(
            "interval derivative integral", via_derivative, via_endpoints, tol
        )
    return via_derivative


# ──────────────────────────────────────────────────────────────
# Stability under perturbation
# ──────────────────────────────────────────────────────────────
def perturbation_stability(
    f: RoofFunction, g: RoofFunction, *, C: int
) -> StabilityCertificate:
    """Decide whether f + g inherits (θ) from f at the same j.

    Sufficient condition: Var g <= min{|S(f)|/((2+η_g)(2C+1)((2C+1)^j+1)), |d_j|}
    for some η_g > (θ_f+7)/θ_f. The certificate's θ_{f+g} is the midpoint of
    (0, 1/(4+θ_f+η_g)) and is re-checked on f + g directly.
    """
    found = theta_condition(f, C)
    if found is None:
        raise HypothesisError("theta condition", "f does not satisfy (theta)")
    j, theta_f = found
    var_g = g.variation()
    d_j = abs(f.jumps.entries[j - 1].d)
    eta_min = (theta_f + 7.0) / theta_f
    if var_g == 0.0:
        eta_g = max(get_config().theta_max, 2.0 * eta_min)
    else:
        eta_g = f.abs_S_lower / (var_g * float(_window_size(C, j))) - 2.0
    if var_g > d_j:
        reason = f"Var g={var_g:.3g} > |d_j|={d_j:.3g}"
        return StabilityCertificate(False, j, theta_f, reason=reason)
    if eta_g <= eta_min:
        return StabilityCertificate(
            False,
            j,
            theta_f,
            reason=f"Var g={var_g:.3g} too large for eta_g > {eta_min:.3g}",
        )
    theta_fg = 0.5 / (4.0 + theta_f + eta_g)
    achieved = theta_at(f + g, C, j)
    reverified = achieved is not None and achieved >= theta_fg
    if not reverified:
        log.error(
            "falsification_event",
            contract="perturbation stability",
            j=j,
            theta_fg=theta_fg,
        )
    return StabilityCertificate(True, j, theta_f, eta_g, theta_fg, reverified)


# ──────────────────────────────────────────────────────────────
# Non-cohomologous example
# ──────────────────────────────────────────────────────────────
def coh_threshold(f: RoofFunction, epsilon: float) -> int | None:
    """Minimal N with Σ_{i>N} d_i + tail <= ε·min{d_1, ..., d_N}."""
    entries = f.jumps.entries
    for n in range(1, len(entries) + 1):
        smallest = min(abs(j.d) for j in entries[:n])
        if f.jumps.tail_after(n) <= epsilon * smallest:
            return n
    return None


def _primes() -> Iterable[int]:
    found: list[int] = []
    candidate = 2
    while True:
        if all(candidate % p for p in found if p * p <= candidate):
            found.append(candidate)
            yield candidate
        candidate += 1


def _on_orbit_lattice(delta: Fraction, alpha: ContinuedFraction, k_max: int) -> bool:
    """Whether δ ∈ ℤ + ℤα; exact for integers, numerical for |k| <= k_max."""
    if delta.denominator == 1:
        return True
    bits = alpha.bits
    raw = fixed_point.from_fraction(delta, bits)
    threshold = 1 << (bits // 2)
    mask = fixed_point.mask(bits)
    for k in range(-k_max, k_max + 1):
        multiple = (k * alpha.alpha_raw) & mask
        if fixed_point.circle_distance(raw, multiple, bits) < threshold:
            return True
    return False


def _schedule_tail(
    ratio_schedule: Callable[[int], float], start: int, base: float
) -> float:
    extra = [base * ratio_schedule(i) for i in range(start, start + 33)]
    if any(v < 0 for v in extra):
        raise InvalidInputError("ratio_schedule", "jumps must stay positive")
    if any(v == 0.0 for v in extra):
        return math.fsum(extra)
    ratio = max(b / a for a, b in zip(extra, extra[1:], strict=False))
    if ratio >= 1.0:
        raise InvalidInputError(
            "ratio_schedule", "terms are not geometrically summable"
        )
    return math.fsum(extra[:-1]) + extra[-1] / (1.0 - ratio)


def build_noncohomologous_example(
    base_jump: float,
    ratio_schedule: Callable[[int], float],
    *,
    alpha: ContinuedFraction,
    eps_grid: Sequence[float] = (0.1,),
    max_jumps: int = 12,
    constant: float = 1.0,
    lattice_depth: int = 1000,
) -> RoofFunction:
    """Roof with positive jumps d_i = base·schedule(i) at rational points 1/p_i.

    Candidates whose difference with an earlier point lies on ℤ + ℤα are
    replaced by the next prime denominator. The tail beyond ``max_jumps`` is
    bounded assuming the schedule's ratios do not increase past the cut.
    """
    if base_jump <= 0:
        raise InvalidInputError("base_jump", "must be positive")
    bits = alpha.bits
    primes = iter(_primes())
    jumps: list[Jump] = []
    substitutions: list[str] = []
    for i in range(1, max_jumps + 1):
        d = base_jump * ratio_schedule(i)
        if not d > 0:
            raise InvalidInputError("ratio_schedule", f"term {i} is not positive")
        while True:
            beta = Fraction(1, next(primes))
            clash = any(
                _on_orbit_lattice(beta - j.rational, alpha, lattice_depth)
                for j in jumps
                if j.rational is not None
            )
            if not clash:
                break
            substitutions.append(f"{beta.numerator}/{beta.denominator}")
        jumps.append(Jump(CirclePoint.from_fraction(beta, bits), d, beta))
    tail = _schedule_tail(ratio_schedule, max_jumps + 1, base_jump)
    f = RoofFunction(JumpSpec.ordered(jumps, tail), ACComponent.zero(), constant)
    if substitutions:
        log.info("beta_substituted", rejected=substitutions)
    for eps in eps_grid:
        if coh_threshold(f, eps) is None:
            raise HypothesisError(
                "coh", f"no N_eps within {max_jumps} jumps for eps={eps}"
            )
    return f
