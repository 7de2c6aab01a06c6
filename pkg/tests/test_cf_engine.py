"""Tests for continued fractions and the three-gap geometry."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from structlog.testing import capture_logs

from specflow.core.cf_engine import (
    alpha_fixed,
    approximation_violations,
    cf_expand,
    cf_expand_float,
    circle_multiple,
    ensure_depth,
    estimate_gap_constants,
    nearest_int_distance,
    parse_quadratic,
    three_gap_partition,
    two_orbit_gap_constant,
)
from specflow.errors import InsufficientDepthError, InvalidInputError
from specflow.models.domain import CirclePoint, QuadraticIrrational

from .helpers import GOLDEN, SILVER


non_squares = st.integers(min_value=2, max_value=2000).filter(
    lambda b: math.isqrt(b) ** 2 != b
)


class TestParseQuadratic:
    @pytest.mark.parametrize(
        ("text", "expected"),
        [
            (GOLDEN, (-1, 5, 2)),
            ("(1+sqrt(5))/2", (-1, 5, 2)),
            (SILVER, (-1, 2, 1)),
            ("sqrt(2)", (-1, 2, 1)),
            ("sqrt(2)-1", (-1, 2, 1)),
        ],
    )
    def test_canonical_form(self, text: str, expected: tuple[int, int, int]) -> None:
        q = parse_quadratic(text)
        assert (q.a, q.b, q.c) == expected

    @pytest.mark.parametrize(
        "text", ["sqrt(4)", "(1-sqrt(5))/2", "(1+sqrt(5))/-2", "golden", "3+4"]
    )
    def test_rejects(self, text: str) -> None:
        with pytest.raises(InvalidInputError):
            parse_quadratic(text)

    def test_value_in_unit_interval(self) -> None:
        q = parse_quadratic("(7+sqrt(13))/3")
        value = float(q.to_mpf(64))
        assert 0.0 < value < 1.0

    def test_non_canonical_direct_construction_rejected(self) -> None:
        with pytest.raises(InvalidInputError):
            QuadraticIrrational(1, 5, 2)


class TestCfExpand:
    def test_golden_quotients_and_fibonacci(self, golden) -> None:
        assert set(golden.quotients) == {1}
        assert golden.denominators[:8] == (1, 1, 2, 3, 5, 8, 13, 21)
        assert golden.C == 2
        assert golden.period_start == 0
        assert golden.period_length == 1

    def test_silver_quotients(self, silver) -> None:
        assert set(silver.quotients) == {2}
        assert silver.denominators[:5] == (1, 2, 5, 12, 29)
        assert silver.C == 3

    def test_periodic_tail_of_sqrt7(self) -> None:
        # √7 − 2 = [0; 1, 1, 1, 4, 1, 1, 1, 4, ...]
        cf = cf_expand(parse_quadratic("sqrt(7)"), 12)
        assert cf.quotients[:8] == (1, 1, 1, 4, 1, 1, 1, 4)
        assert cf.period_length == 4

    def test_depth_must_be_positive(self) -> None:
        with pytest.raises(InvalidInputError):
            cf_expand(parse_quadratic(GOLDEN), 0)

    def test_alpha_raw_is_exact_floor(self, golden) -> None:
        # (√5 − 1)/2 · 2^bits, floored: compare with the integer square root
        bits = golden.bits
        expected = (math.isqrt(5 << (2 * bits)) - (1 << bits)) // 2
        assert golden.alpha_raw == expected

    def test_q_beyond_depth_raises(self) -> None:
        cf = cf_expand(parse_quadratic(GOLDEN), 5)
        with pytest.raises(InsufficientDepthError):
            cf.q(7)

    def test_ensure_depth(self) -> None:
        cf = cf_expand(parse_quadratic(GOLDEN), 5)
        assert ensure_depth(cf, 5) is cf
        deeper = ensure_depth(cf, 12)
        assert deeper.depth == 12
        assert deeper.denominators[:6] == cf.denominators

    @given(b=non_squares, depth=st.integers(min_value=2, max_value=25))
    @settings(max_examples=50, deadline=None)
    def test_convergent_determinant(self, b: int, depth: int) -> None:
        cf = cf_expand(parse_quadratic(f"sqrt({b})"), depth, bits=128)
        for n in range(1, depth + 1):
            det = cf.p(n) * cf.q(n - 1) - cf.p(n - 1) * cf.q(n)
            assert det == (-1) ** (n - 1)

    @given(b=non_squares)
    @settings(max_examples=30, deadline=None)
    def test_sandwich_holds(self, b: int) -> None:
        cf = cf_expand(parse_quadratic(f"sqrt({b})"), 15, bits=256)
        assert approximation_violations(cf) == ()


class TestLowPrecision:
    def test_float_expansion_is_flagged(self) -> None:
        with capture_logs() as logs:
            cf = cf_expand_float(0.375, 10)
        assert cf.low_precision
        # 0.375 = 3/8 = [0; 2, 1, 2]
        assert cf.quotients == (2, 1, 2)
        assert any(e["event"] == "low_precision_alpha" for e in logs)

    @pytest.mark.parametrize("value", [0.0, 1.0, -0.5, 1.5])
    def test_outside_unit_interval(self, value: float) -> None:
        with pytest.raises(InvalidInputError):
            cf_expand_float(value, 5)


class TestApproximation:
    @pytest.mark.parametrize("text", [GOLDEN, SILVER])
    def test_depth_20_has_no_violations(self, text: str) -> None:
        cf = cf_expand(parse_quadratic(text), 20)
        assert approximation_violations(cf) == ()

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (0.75, 0.25),
            (Fraction(7, 4), 0.25),
            (-0.1, 0.1),
            (3.0, 0.0),
        ],
    )
    def test_nearest_int_distance(
        self, value: float | Fraction, expected: float
    ) -> None:
        assert nearest_int_distance(value) == pytest.approx(expected)

    def test_nearest_int_distance_of_point(self) -> None:
        point = CirclePoint.from_fraction(Fraction(7, 8), 64)
        assert nearest_int_distance(point) == 0.125

    def test_circle_multiple_is_modular(self, golden) -> None:
        k = 1_000_003
        point = circle_multiple(golden, k)
        assert point.raw == (k * golden.alpha_raw) % (1 << golden.bits)

    def test_alpha_fixed_agrees_across_precisions(self, golden) -> None:
        wide = alpha_fixed(golden, golden.bits + 72)
        assert alpha_fixed(golden, golden.bits) == golden.alpha_raw
        assert wide >> 72 == golden.alpha_raw
        assert alpha_fixed(golden, 64) == golden.alpha_raw >> (golden.bits - 64)

    def test_alpha_fixed_of_float_source_truncates(self) -> None:
        cf = cf_expand_float(0.3, 6)
        assert alpha_fixed(cf, 64) == cf.alpha_raw >> (cf.bits - 64)


class TestThreeGap:
    def test_single_point_covers_circle(self, golden) -> None:
        part = three_gap_partition(golden, 1)
        assert part.k == 1
        assert part.total == 1

    @pytest.mark.parametrize("k", [2, 3, 5, 8, 13, 50, 144, 377])
    def test_at_most_three_lengths(self, golden, k: int) -> None:
        part = three_gap_partition(golden, k)
        assert part.k == k
        assert part.total == 1
        assert 1 <= len(part.distinct()) <= 3

    def test_two_lengths_at_denominators(self, silver) -> None:
        # k = q_n + q_(n-1) points give exactly two lengths
        k = silver.q(5) + silver.q(4)
        assert len(three_gap_partition(silver, k).distinct()) == 2

    def test_k_must_be_positive(self, golden) -> None:
        with pytest.raises(InvalidInputError):
            three_gap_partition(golden, 0)

    def test_gap_constants_bound_every_k(self, golden) -> None:
        k_max = 200
        c1, c2 = estimate_gap_constants(golden, k_max)
        assert 0 < c2 < c1
        for k in range(1, k_max + 1):
            part = three_gap_partition(golden, k)
            assert c2 / k <= part.min_gap
            assert part.max_gap < c1 / k

    def test_gap_constants_need_two_points(self, golden) -> None:
        with pytest.raises(InvalidInputError):
            estimate_gap_constants(golden, 1)


class TestTwoOrbitGap:
    def test_point_on_orbit_collides(self, golden) -> None:
        beta = CirclePoint((-golden.alpha_raw) % (1 << golden.bits), golden.bits)
        assert two_orbit_gap_constant(golden, beta, 10) == 0.0

    def test_generic_point_keeps_positive_constant(self, golden) -> None:
        beta = CirclePoint.parse("1/3", golden.bits)
        assert two_orbit_gap_constant(golden, beta, 100) > 0.0

    def test_precision_mismatch(self, golden) -> None:
        beta = CirclePoint.parse("1/3", golden.bits + 8)
        with pytest.raises(InvalidInputError):
            two_orbit_gap_constant(golden, beta, 10)
