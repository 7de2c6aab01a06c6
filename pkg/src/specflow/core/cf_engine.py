"""Continued fractions and the finite-orbit geometry of the rotation.

Expansions of quadratic irrationals are exact: partial quotients come from the
integer recurrence on (P + √D)/Q states, convergents from the integer
three-term recurrence, and α itself from an integer square root at the working
precision.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import mpmath
import structlog

from specflow._internal import fixed_point
from specflow.config import get_config
from specflow.errors import InsufficientDepthError, InvalidInputError
from specflow.models.domain import CirclePoint, ContinuedFraction, QuadraticIrrational


if TYPE_CHECKING:
    from collections.abc import Iterable


log = structlog.get_logger()

# Relative slack on the reported constants so float rounding never breaks
# C₂/k <= gap < C₁/k for the observed k.
_GAP_SLACK = 1e-12


def _floor_quadratic(p: int, d: int, q: int) -> int:
    """floor((p + √d)/q) for non-square d and q ≠ 0."""
    s = math.isqrt(d)
    if q > 0:
        return (p + s) // q
    return -((p + s) // (-q)) - 1


def _convergents(quotients: Iterable[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    ps, qs = [p_cur], [q_cur]
    for a in quotients:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        ps.append(p_cur)
        qs.append(q_cur)
    return tuple(ps), tuple(qs)


def cf_expand(
    alpha: QuadraticIrrational, depth: int, *, bits: int | None = None
) -> ContinuedFraction:
    """Expand α = [0; a_1, a_2, ...] to ``depth`` partial quotients.

    Args:
        alpha: Canonical quadratic irrational in (0, 1)
        depth: Number of partial quotients to materialize (>= 1)
        bits: Fixed-point precision of α; defaults to the configured precision

    Returns:
        ContinuedFraction with convergents p_n/q_n for n = 0..depth and the
        detected period of the expansion
    """
    if depth < 1:
        raise InvalidInputError("depth", f"{depth} < 1")
    bits = bits or get_config().precision_bits

    d = alpha.b
    p_state, q_state = -alpha.a, (d - alpha.a * alpha.a) // alpha.c
    seen: dict[tuple[int, int], int] = {}
    quotients: list[int] = []
    period_start: int | None = None
    period_length: int | None = None
    while len(quotients) < depth:
        state = (p_state, q_state)
        if period_start is None and state in seen:
            period_start = seen[state]
            period_length = len(quotients) - period_start
        seen.setdefault(state, len(quotients))
        a = _floor_quadratic(p_state, d, q_state)
        quotients.append(a)
        p_state = a * q_state - p_state
        q_state = (d - p_state * p_state) // q_state

    numerators, denominators = _convergents(quotients)
    cf = ContinuedFraction(
        quotients=tuple(quotients),
        numerators=numerators,
        denominators=denominators,
        alpha_raw=alpha.fixed(bits),
        bits=bits,
        source=alpha,
        period_start=period_start,
        period_length=period_length,
    )
    log.debug(
        "cf_expanded",
        alpha=str(alpha),
        depth=depth,
        period_start=period_start,
        period_length=period_length,
    )
    return cf


def cf_expand_float(
    value: float, depth: int, *, bits: int | None = None
) -> ContinuedFraction:
    """Low-precision expansion of a 64-bit float (the binary rational it stores)."""
    if not 0.0 < value < 1.0:
        raise InvalidInputError("alpha", f"{value} not in (0, 1)")
    bits = bits or get_config().precision_bits
    x = Fraction(value)
    quotients: list[int] = []
    while len(quotients) < depth:
        inv = 1 / x
        a = math.floor(inv)
        quotients.append(a)
        x = inv - a
        if x == 0:
            break
    numerators, denominators = _convergents(quotients)
    log.warning("low_precision_alpha", value=value, depth=len(quotients))
    return ContinuedFraction(
        quotients=tuple(quotients),
        numerators=numerators,
        denominators=denominators,
        alpha_raw=fixed_point.from_float(value, bits),
        bits=bits,
        low_precision=True,
        float_value=value,
    )


def ensure_depth(cf: ContinuedFraction, depth: int) -> ContinuedFraction:
    """Return ``cf`` or a re-expansion with at least ``depth`` quotients."""
    if cf.depth >= depth:
        return cf
    if cf.source is None:
        raise InsufficientDepthError(required=depth, available=cf.depth)
    return cf_expand(cf.source, depth, bits=cf.bits)


def parse_quadratic(text: str) -> QuadraticIrrational:
    return QuadraticIrrational.parse(text)


def alpha_fixed(alpha: ContinuedFraction, bits: int) -> int:
    """α as a fixed-point numerator at ``bits`` (exact floor for quadratic α)."""
    if alpha.source is not None:
        return alpha.source.fixed(bits)
    return fixed_point.rescale(alpha.alpha_raw, alpha.bits, bits)


def circle_multiple(alpha: ContinuedFraction, k: int) -> CirclePoint:
    """{kα} by exact modular multiplication."""
    return CirclePoint((k * alpha.alpha_raw) & fixed_point.mask(alpha.bits), alpha.bits)


def nearest_int_distance(t: float | Fraction | CirclePoint | mpmath.mpf) -> float:
    """‖t‖ = min({t}, 1 − {t})."""
    if isinstance(t, CirclePoint):
        return fixed_point.to_float(min(t.raw, (1 << t.bits) - t.raw), t.bits)
    if isinstance(t, Fraction):
        frac = t - math.floor(t)
        return float(min(frac, 1 - frac))
    if isinstance(t, mpmath.mpf):
        frac_mp = t - mpmath.floor(t)
        return float(min(frac_mp, 1 - frac_mp))
    frac_f = t - math.floor(t)
    return min(frac_f, 1.0 - frac_f)


def _alpha_mpf(alpha: ContinuedFraction) -> mpmath.mpf:
    if alpha.source is not None:
        return alpha.source.to_mpf(alpha.bits)
    return mpmath.mpf(alpha.alpha_raw) / (1 << alpha.bits)


def approximation_violations(alpha: ContinuedFraction) -> tuple[str, ...]:
    """Check the convergent error sandwich and the ‖q_nα‖ chain.

    For every n with q_{n+1} materialized:
    1/(2q_nq_{n+1}) < |α − p_n/q_n| < 1/(q_nq_{n+1}) and q_{n+1} <= C·q_n;
    for n >= 1 additionally 1/(2q_{n+1}) < ‖q_nα‖ < 1/q_{n+1} and
    ‖q_nα‖ >= 1/(2Cq_n).

    Returns:
        Human-readable descriptions of every failed inequality (empty if none)
    """
    failures: list[str] = []
    C = alpha.C
    with mpmath.workprec(alpha.bits + 64):
        a = _alpha_mpf(alpha)
        for n in range(len(alpha.denominators) - 1):
            p, q, q_next = alpha.p(n), alpha.q(n), alpha.q(n + 1)
            err = abs(a - mpmath.mpf(p) / q)
            lower = mpmath.mpf(1) / (2 * q * q_next)
            upper = mpmath.mpf(1) / (q * q_next)
            if not lower < err < upper:
                failures.append(f"n={n}: |alpha - p/q| outside sandwich")
            if q_next > C * q:
                failures.append(f"n={n}: q_(n+1) > C q_n")
            if n >= 1:
                dist = abs(q * a - p)
                if not mpmath.mpf(1) / (2 * q_next) < dist < mpmath.mpf(1) / q_next:
                    failures.append(f"n={n}: ||q_n alpha|| outside chain")
                if dist < mpmath.mpf(1) / (2 * C * q):
                    failures.append(f"n={n}: ||q_n alpha|| below 1/(2Cq_n)")
    return tuple(failures)


# ──────────────────────────────────────────────────────────────
# Three-gap geometry
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class GapPartition:
    """Sorted arc lengths (raw units) of a finite circle partition."""

    raw_gaps: tuple[int, ...]
    bits: int

    @property
    def k(self) -> int:
        return len(self.raw_gaps)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(fixed_point.to_float(g, self.bits) for g in self.raw_gaps)

    @property
    def total(self) -> Fraction:
        return Fraction(sum(self.raw_gaps), 1 << self.bits)

    def distinct(self, tolerance: float | None = None) -> tuple[float, ...]:
        """Distinct gap lengths, merging values closer than ``tolerance``."""
        tolerance = get_config().gap_tolerance if tolerance is None else tolerance
        tol_raw = int(tolerance * (1 << self.bits))
        groups: list[int] = []
        for g in self.raw_gaps:
            if not groups or g - groups[-1] > tol_raw:
                groups.append(g)
        return tuple(fixed_point.to_float(g, self.bits) for g in groups)

    @property
    def min_gap(self) -> float:
        return fixed_point.to_float(self.raw_gaps[0], self.bits)

    @property
    def max_gap(self) -> float:
        return fixed_point.to_float(self.raw_gaps[-1], self.bits)


def _orbit_points(alpha: ContinuedFraction, k: int, offset: int = 0) -> list[int]:
    m = fixed_point.mask(alpha.bits)
    return [(offset - j * alpha.alpha_raw) & m for j in range(k)]


def three_gap_partition(alpha: ContinuedFraction, k: int) -> GapPartition:
    """Gaps of the partition of the circle by {0, −α, ..., −(k−1)α}."""
    if k < 1:
        raise InvalidInputError("k", f"{k} < 1")
    full = 1 << alpha.bits
    points = sorted(_orbit_points(alpha, k))
    gaps = [b - a for a, b in zip(points, points[1:], strict=False)]
    gaps.append(full - points[-1] + points[0])
    return GapPartition(tuple(sorted(gaps)), alpha.bits)


class _IncrementalPartition:
    """Sorted circle points with a multiset of gap lengths."""

    def __init__(self, bits: int) -> None:
        self.full = 1 << bits
        self.points: list[int] = []
        self.gaps: Counter[int] = Counter()

    def insert(self, x: int) -> None:
        if not self.points:
            self.points.append(x)
            self.gaps[self.full] += 1
            return
        i = bisect.bisect_left(self.points, x)
        if i < len(self.points) and self.points[i] == x:
            # coincident point: a zero-length gap
            self.gaps[0] += 1
            return
        left = self.points[i - 1]
        right = self.points[i % len(self.points)]
        old = (right - left) % self.full or self.full
        self.gaps[old] -= 1
        if self.gaps[old] == 0:
            del self.gaps[old]
        self.gaps[(x - left) % self.full] += 1
        self.gaps[(right - x) % self.full] += 1
        self.points.insert(i, x)

    def extremes(self) -> tuple[int, int]:
        keys = self.gaps.keys()
        return min(keys), max(keys)


def estimate_gap_constants(alpha: ContinuedFraction, k_max: int) -> tuple[float, float]:
    """Empirical (C₁, C₂) with C₂/k <= gap < C₁/k for every k <= k_max.

    C₁ is the max over k of k·(max gap), inflated by a relative 1e-12 so the
    upper bound is strict; C₂ is the min over k of k·(min gap), deflated alike.
    """
    if k_max < 2:
        raise InvalidInputError("k_max", f"{k_max} < 2")
    part = _IncrementalPartition(alpha.bits)
    m = fixed_point.mask(alpha.bits)
    c1_raw = 0
    c2_raw: int | None = None
    for k in range(1, k_max + 1):
        part.insert((-(k - 1) * alpha.alpha_raw) & m)
        lo, hi = part.extremes()
        c1_raw = max(c1_raw, k * hi)
        c2_raw = k * lo if c2_raw is None else min(c2_raw, k * lo)
    scale = float(1 << alpha.bits)
    c1 = c1_raw / scale * (1.0 + _GAP_SLACK)
    c2 = (c2_raw or 0) / scale * (1.0 - _GAP_SLACK)
    log.debug("gap_constants", k_max=k_max, C1=c1, C2=c2)
    return c1, c2


def two_orbit_gap_constant(
    alpha: ContinuedFraction, beta: CirclePoint, m_max: int
) -> float:
    """min over m <= m_max of m·(min gap) for {−jα} ∪ {β − jα}, 0 <= j < m.

    Zero exactly when β lies on the orbit of 0 within the scanned range.
    """
    if m_max < 1:
        raise InvalidInputError("m_max", f"{m_max} < 1")
    if beta.bits != alpha.bits:
        raise InvalidInputError("beta", "precision differs from alpha")
    part = _IncrementalPartition(alpha.bits)
    m = fixed_point.mask(alpha.bits)
    best: int | None = None
    for count in range(1, m_max + 1):
        j = count - 1
        part.insert((-j * alpha.alpha_raw) & m)
        part.insert((beta.raw - j * alpha.alpha_raw) & m)
        lo, _ = part.extremes()
        best = count * lo if best is None else min(best, count * lo)
    return (best or 0) / float(1 << alpha.bits)
