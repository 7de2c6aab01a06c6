"""Tests for the experiment handlers behind the scenario runner."""

from __future__ import annotations

from typing import get_args

import pytest

from specflow.core.roof_algebra import ACComponent
from specflow.experiments import (
    HANDLERS,
    RIGIDITY_THRESHOLD,
    ExperimentInput,
    build_roof,
    run_birkhoff,
    run_cf,
    run_distribution,
    run_dk,
    run_gaps,
    run_mixing,
    run_ratner,
    run_rigidity,
    run_stability,
)
from specflow.models.api import (
    BirkhoffParams,
    CFParams,
    DistributionParams,
    DKParams,
    GapsParams,
    MixingParams,
    RatnerParamsModel,
    RigidityParams,
    RoofSpec,
    StabilityParams,
)
from specflow.types import ExperimentKind


@pytest.fixture
def sawtooth_input(golden, sawtooth) -> ExperimentInput:
    return ExperimentInput(golden, sawtooth, seed=7)


def test_every_experiment_has_a_handler() -> None:
    assert set(HANDLERS) == set(get_args(ExperimentKind))


class TestBuildRoof:
    def test_explicit_jumps(self, golden) -> None:
        spec = RoofSpec.model_validate(
            {"constant": 1.0, "jumps": [{"beta": "0", "d": 0.5}]}
        )
        roof = build_roof(spec, golden)
        assert roof.S == 0.5
        assert roof.integral() == pytest.approx(1.25)

    def test_named_continuous_part(self, golden) -> None:
        spec = RoofSpec.model_validate(
            {"constant": 1.0, "named_ac": {"kind": "tent", "amplitude": 0.2}}
        )
        assert build_roof(spec, golden).ac == ACComponent.tent(0.2)

    def test_explicit_continuous_part(self, golden) -> None:
        spec = RoofSpec.model_validate(
            {
                "ac": {
                    "breakpoints": [0.0, 0.5],
                    "coefficients": [[0.0, 1.0], [0.5, -1.0]],
                }
            }
        )
        roof = build_roof(spec, golden)
        assert roof.ac.breakpoints == (0.0, 0.5)

    def test_generated_jumps_add_the_constant(self, golden) -> None:
        spec = RoofSpec.model_validate(
            {
                "constant": 0.5,
                "noncohomologous": {"base_jump": 0.5, "ratio": 0.05, "max_jumps": 8},
            }
        )
        roof = build_roof(spec, golden)
        assert len(roof.jumps) == 8
        assert roof.constant == pytest.approx(1.5)
        assert roof.jumps.tail_bound > 0.0


class TestHandlers:
    def test_cf(self, sawtooth_input) -> None:
        result = run_cf(sawtooth_input, CFParams(depth=12))
        assert result.falsifications == 0
        assert result.payload["violations"] == []
        assert result.table is not None
        rows = list(result.table.iter_rows())
        assert len(rows) == 12
        assert rows[4] == (5, 1, "5", "8")

    def test_gaps(self, sawtooth_input) -> None:
        result = run_gaps(sawtooth_input, GapsParams(k_max=60))
        assert result.falsifications == 0
        assert result.payload["failures"] == []
        assert len(result.payload["profile"]) == 60
        assert 0 < result.payload["C2"] < result.payload["C1"]

    def test_birkhoff_with_trajectory(self, sawtooth_input) -> None:
        params = BirkhoffParams(x="1/7", n=25, times=[0.5, -3.0])
        result = run_birkhoff(sawtooth_input, params)
        assert len(result.payload["series"]) == 25
        assert len(result.payload["trajectory"]) == 2
        assert result.error_bound < 1e-12

    def test_birkhoff_without_times(self, sawtooth_input) -> None:
        result = run_birkhoff(sawtooth_input, BirkhoffParams(n=3))
        assert "trajectory" not in result.payload

    def test_dk_is_seeded(self, sawtooth_input) -> None:
        params = DKParams(points=6, n_max=8)
        first = run_dk(sawtooth_input, params)
        again = run_dk(sawtooth_input, params)
        assert first.payload == again.payload
        assert first.falsifications == 0
        assert first.rng == "philox4x64"

    def test_ratner(self, sawtooth_input) -> None:
        params = RatnerParamsModel(epsilon=0.1, N=10, trials=3)
        result = run_ratner(sawtooth_input, params)
        assert result.payload["trials"] == 3
        assert result.payload["band"]["epsilon"] == 0.1
        assert result.rng == "philox4x64"

    def test_mixing_defaults_to_own_roof(self, sawtooth_input) -> None:
        params = MixingParams(r_list=[20.0, 40.0], q_indices=[5, 6])
        result = run_mixing(sawtooth_input, params)
        assert result.falsifications == 0
        assert result.payload["K"] == 1
        assert len(result.payload["grid"]) == 4

    def test_rigidity_with_eta_table(self, sawtooth_input) -> None:
        params = RigidityParams(
            epsilon=0.05,
            t_min=10.0,
            t_max=12.0,
            steps=3,
            grid_n=200,
            eps_grid=[0.1, 0.01],
        )
        result = run_rigidity(sawtooth_input, params)
        assert result.payload["threshold"] == RIGIDITY_THRESHOLD
        assert isinstance(result.payload["below_threshold"], bool)
        rows = result.payload["eta_table"]["rows"]
        assert [row["eta"] for row in rows] == [1, 1]

    def test_distribution_of_continuous_part(self, golden, tent_roof) -> None:
        inp = ExperimentInput(golden, tent_roof)
        params = DistributionParams(n_indices=[10, 12], samples=500, ac_only=True)
        result = run_distribution(inp, params)
        assert [h["q"] for h in result.payload["histograms"]] == [89, 233]
        assert 0.0 <= result.payload["zeta"] <= 1.0

    def test_distribution_after_truncation(self, golden, three_jump) -> None:
        inp = ExperimentInput(golden, three_jump)
        params = DistributionParams(n_indices=[6], samples=200, subtract_von_neumann=1)
        result = run_distribution(inp, params)
        assert len(result.payload["histograms"]) == 1

    @pytest.mark.parametrize(("d", "stable"), [(1e-5, True), (0.3, False)])
    def test_stability(self, sawtooth_input, d: float, stable: bool) -> None:
        spec = RoofSpec.model_validate({"jumps": [{"beta": "1/2", "d": d}]})
        result = run_stability(sawtooth_input, StabilityParams(g=spec))
        assert result.payload["stable"] is stable
        assert result.falsifications == 0
