"""Tests for oscillatory integrals, rigidity scans and Birkhoff-sum histograms."""

from __future__ import annotations

import cmath
import math
import tracemalloc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from structlog.testing import capture_logs

from specflow.core.cf_engine import cf_expand, parse_quadratic
from specflow.core.mixing_lab import (
    birkhoff_distribution_along_qn,
    eta_condition_check,
    oscillatory_integral,
    partial_rigidity_scan,
    rigidity_mass_bound,
    rigidity_statistic,
    weak_mixing_bound_check,
)
from specflow.core.roof_algebra import ACComponent, RoofFunction
from specflow.errors import HypothesisError, InvalidInputError

from .helpers import GOLDEN


def _midpoint_integral(f: RoofFunction, alpha, r: float, q: int, n: int) -> complex:
    """Midpoint rule for ∫ exp(2πi r f^(q)(x)) dx on n cells."""
    xs = (np.arange(n, dtype=np.float64) + 0.5) / n
    phase = np.zeros(n)
    for k in range(q):
        pos = np.mod(xs + (k * alpha.value) % 1.0, 1.0)
        phase += f.constant + f.ac.evaluate_array(pos)
        for jump in f.jumps.entries:
            phase += jump.d * np.mod(pos - jump.beta.position, 1.0)
    return complex(np.mean(np.exp(2j * math.pi * r * phase)))


class TestOscillatoryIntegral:
    def test_constant_roof_is_a_pure_phase(self, golden) -> None:
        f = RoofFunction.constant_roof(1.3)
        result = oscillatory_integral(f, golden, 2.0, 5)
        assert result.value == pytest.approx(cmath.exp(2j * math.pi * 2.0 * 5 * 1.3))
        assert result.magnitude == pytest.approx(1.0)

    @pytest.mark.parametrize(("r", "n_index"), [(10.0, 5), (3.7, 6), (-2.5, 4)])
    def test_piecewise_linear_matches_midpoint_rule(
        self, three_jump, golden, r: float, n_index: int
    ) -> None:
        q = golden.q(n_index)
        result = oscillatory_integral(three_jump, golden, r, q)
        oracle = _midpoint_integral(three_jump, golden, r, q, 1_000_000)
        assert abs(result.value - oracle) < 1e-4
        assert result.cells == 3 * q

    def test_continuous_part_matches_midpoint_rule(self, tent_roof, golden) -> None:
        q = golden.q(4)
        result = oscillatory_integral(tent_roof, golden, 2.0, q)
        oracle = _midpoint_integral(tent_roof, golden, 2.0, q, 1_000_000)
        assert abs(result.value - oracle) < 1e-4
        assert result.error_bound <= 1e-8

    def test_bad_arguments(self, sawtooth, golden) -> None:
        with pytest.raises(InvalidInputError):
            oscillatory_integral(sawtooth, golden, 0.0, 5)
        with pytest.raises(InvalidInputError):
            oscillatory_integral(sawtooth, golden, 1.0, 0)


class TestWeakMixingBound:
    def test_sawtooth_stays_below_bound(self, sawtooth, golden) -> None:
        q_list = [golden.q(n) for n in range(5, 9)]
        report = weak_mixing_bound_check(
            sawtooth, sawtooth, [10.0, 20.0, 40.0], q_list, golden
        )
        assert report.violations == 0
        assert report.K == 1
        assert report.var_h_over_S == 0.0
        assert len(report.points) == 12
        # 2/(π·40) < 0.05 bounds every magnitude at r = 40
        assert report.empirical_r0 is not None
        assert report.empirical_r0 <= 40.0

    def test_three_jumps_against_two(self, three_jump, golden) -> None:
        g_vn = RoofFunction.from_jumps(
            [("0", 0.5), ("1/3", 0.2)], constant=1.0, bits=golden.bits
        )
        q_list = [golden.q(5), golden.q(7)]
        report = weak_mixing_bound_check(
            three_jump, g_vn, [10.0, 40.0], q_list, golden
        )
        assert report.violations == 0
        assert report.K == 2
        assert report.S == pytest.approx(0.7)
        assert report.bound_c == pytest.approx(report.var_h_over_S + 0.05)

    def test_far_reference_rejected(self, sawtooth, golden) -> None:
        g_vn = RoofFunction.from_jumps([("0", 0.05)], constant=1.0, bits=golden.bits)
        with pytest.raises(HypothesisError):
            weak_mixing_bound_check(sawtooth, g_vn, [10.0], [5], golden)

    def test_zero_sum_reference_rejected(self, sawtooth, golden) -> None:
        g_vn = RoofFunction.from_jumps(
            [("0", 0.5), ("1/2", -0.5)], constant=1.0, bits=golden.bits
        )
        with pytest.raises(HypothesisError):
            weak_mixing_bound_check(sawtooth, g_vn, [10.0], [5], golden)

    def test_reference_with_tail_rejected(self, sawtooth, golden) -> None:
        g_vn = RoofFunction.from_jumps(
            [("0", 0.5)], constant=1.0, tail_bound=0.001, bits=golden.bits
        )
        with pytest.raises(InvalidInputError):
            weak_mixing_bound_check(sawtooth, g_vn, [10.0], [5], golden)


class TestRigidity:
    @pytest.mark.parametrize(("t", "expected"), [(5.0, 1.0), (5.5, 0.0), (12.0, 1.0)])
    def test_constant_roof_returns_at_integers(
        self, golden, t: float, expected: float
    ) -> None:
        f = RoofFunction.constant_roof(1.0)
        assert rigidity_statistic(f, golden, t, 0.1, 100) == expected

    def test_scan_injects_denominator_times(self, golden) -> None:
        f = RoofFunction.constant_roof(1.0)
        profile = partial_rigidity_scan(f, golden, 0.1, 1.0, 20.0, 3, grid_n=50)
        assert profile.injected == (1.0, 2.0, 3.0, 5.0, 8.0, 13.0)
        masses = dict(zip(profile.times, profile.mass, strict=True))
        assert masses[10.5] == 0.0
        assert masses[13.0] == 1.0
        assert profile.sup == 1.0

    def test_scan_agrees_with_single_statistic(self, sawtooth, golden) -> None:
        profile = partial_rigidity_scan(sawtooth, golden, 0.05, 10.0, 12.0, 3)
        masses = dict(zip(profile.times, profile.mass, strict=True))
        single = rigidity_statistic(sawtooth, golden, 10.0, 0.05, 2000)
        assert masses[10.0] == single
        assert all(0.0 <= m <= 1.0 for m in profile.mass)

    def test_epsilon_must_stay_below_infimum(self, sawtooth, golden) -> None:
        with pytest.raises(InvalidInputError):
            rigidity_statistic(sawtooth, golden, 10.0, 1.0, 100)

    def test_time_must_exceed_twice_epsilon(self, sawtooth, golden) -> None:
        with pytest.raises(InvalidInputError):
            partial_rigidity_scan(sawtooth, golden, 0.1, 0.15, 5.0, 4)

    @given(
        t=st.floats(2.0, 15.0),
        eps=st.tuples(st.floats(0.005, 0.45), st.floats(0.005, 0.45)),
    )
    @settings(max_examples=30, deadline=None)
    def test_never_decreases_as_epsilon_grows(
        self, t: float, eps: tuple[float, float]
    ) -> None:
        alpha = cf_expand(parse_quadratic(GOLDEN), 20)
        f = RoofFunction.from_jumps([("0", 0.5)], constant=1.0, bits=alpha.bits)
        narrow, wide = sorted(eps)
        assert rigidity_statistic(f, alpha, t, narrow, 300) <= rigidity_statistic(
            f, alpha, t, wide, 300
        )

    def test_stable_under_grid_refinement(self, sawtooth, golden) -> None:
        # j runs over 7..10; f^(j) has at most j + 1 increasing linear pieces,
        # so the set has at most 2(j + 1) boundary points per j
        boundary = sum(2 * (j + 1) for j in range(7, 11))
        coarse = rigidity_statistic(sawtooth, golden, 10.0, 0.05, 1000)
        fine = rigidity_statistic(sawtooth, golden, 10.0, 0.05, 8000)
        assert 0.0 < fine < 1.0
        assert abs(coarse - fine) <= boundary * (1 / 1000 + 1 / 8000)

    def test_mass_bound(self, sawtooth) -> None:
        # 48 · 1 · 1.5 · (1 + 1) / (0.5 · 1) = 288
        assert rigidity_mass_bound(sawtooth, 0.01, 1) == pytest.approx(2.89)


class TestEtaTable:
    def test_single_jump(self, sawtooth) -> None:
        table = eta_condition_check(sawtooth, 2.0, 0.5, [0.2, 0.1, 0.01])
        assert table.ratio == pytest.approx(1.25)
        assert [row.eta for row in table.rows] == [1, 1, 1]
        assert [row.product for row in table.rows] == [0.2, 0.1, 0.01]
        assert table.trends_to_zero
        assert not table.partial

    def test_geometric_jumps_need_more_terms(self, golden) -> None:
        f = RoofFunction.from_jumps(
            [(f"1/{k + 2}", 0.5**k) for k in range(12)], constant=3.0, bits=golden.bits
        )
        table = eta_condition_check(f, 2.0, 0.5, [0.5, 0.05, 0.005])
        etas = [row.eta for row in table.rows]
        assert etas == sorted(etas)
        assert etas[0] is not None
        assert etas[-1] > etas[0]

    def test_partial_rows_when_tail_is_wide(self, golden) -> None:
        f = RoofFunction.from_jumps(
            [("0", 0.5)], constant=1.0, tail_bound=0.01, bits=golden.bits
        )
        with capture_logs() as logs:
            table = eta_condition_check(f, 2.0, 0.5, [0.2, 0.01])
        assert table.partial
        assert table.rows[0].eta == 1
        assert table.rows[1].eta is None
        assert table.to_dict()["rows"][1]["eta"] is None
        assert any(e["event"] == "eta_table_partial" for e in logs)

    def test_inverse_square_jumps_fail_the_condition(self, golden) -> None:
        # Σ_{i>n} 1/i² ≈ 1/n, so η(ε)·ε stays near C₂/C₁ + 1
        f = RoofFunction.from_jumps(
            [(f"{i}/401", 1.0 / i**2) for i in range(1, 201)],
            constant=3.0,
            tail_bound=1.0 / 200,
            bits=golden.bits,
        )
        table = eta_condition_check(f, 2.0, 0.5, [0.1, 0.03, 0.01])
        assert not table.partial
        products = [row.product for row in table.rows]
        assert all(p is not None and p > 1.0 for p in products)
        assert not table.trends_to_zero

    def test_zero_sum_rejected(self, golden) -> None:
        f = RoofFunction.from_jumps(
            [("0", 0.5), ("1/2", -0.5)], constant=1.0, bits=golden.bits
        )
        with pytest.raises(HypothesisError):
            eta_condition_check(f, 2.0, 0.5, [0.1])


class TestDistribution:
    def test_constant_roof_concentrates_at_zero(self, golden) -> None:
        hist = birkhoff_distribution_along_qn(
            RoofFunction.constant_roof(1.0), golden, 5, 500
        )
        assert hist.q == 8
        assert hist.mass_inside == 1.0
        assert hist.mass_outside == 0.0

    def test_masses_form_a_distribution(self, sawtooth, golden) -> None:
        hist = birkhoff_distribution_along_qn(sawtooth, golden, 6, 1000, tau=0.05)
        assert len(hist.edges) == len(hist.masses) + 1
        assert sum(hist.masses) == pytest.approx(1.0)
        # Denjoy–Koksma keeps every recentred sum within Var f = 1
        assert hist.edges[0] >= -1.0 - 0.03
        assert hist.edges[-1] <= 1.0 + 0.03

    def test_smooth_part_shrinks_along_denominators(self, golden) -> None:
        h = RoofFunction(ac=ACComponent.tent(0.2))
        hist = birkhoff_distribution_along_qn(h, golden, 12, 2000, tau=0.05)
        assert hist.q == 233
        assert hist.mass_inside == 1.0

    def test_without_recentring(self, golden) -> None:
        hist = birkhoff_distribution_along_qn(
            RoofFunction.constant_roof(1.0), golden, 5, 100, recentre=False
        )
        assert hist.mass_inside == 0.0
        assert hist.edges[0] <= 8.0 <= hist.edges[-1]

    def test_needs_samples(self, sawtooth, golden) -> None:
        with pytest.raises(InvalidInputError):
            birkhoff_distribution_along_qn(sawtooth, golden, 5, 0)

    def test_memory_does_not_grow_with_the_denominator(self, silver) -> None:
        f = RoofFunction.from_jumps([("0", 0.5)], constant=1.0, bits=silver.bits)
        tracemalloc.start()
        try:
            hist = birkhoff_distribution_along_qn(f, silver, 10, 2000)
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        assert hist.q == silver.q(10)
        assert peak < 8_000_000
