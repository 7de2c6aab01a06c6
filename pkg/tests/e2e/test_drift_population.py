"""Drift-interval population run on the golden sawtooth."""

from __future__ import annotations

import pytest

from specflow.config import get_config


pytestmark = [
    pytest.mark.e2e,
    pytest.mark.slow,
]


def test_golden_sawtooth_population(run_shipped) -> None:
    report = run_shipped("golden_ratner")
    payload = report.payload
    params = payload["params"]

    assert report.falsifications == 0
    assert payload["falsification_count"] == 0
    assert payload["trials"] == 200
    assert payload["success_fraction"] >= 0.9
    assert params["kappa"] == pytest.approx(0.02)
    assert params["C"] == 2

    tolerance = get_config().rho_tolerance
    successes = [r for r in payload["reports"] if r["L"] >= params["N"]]
    assert len(successes) == payload["successes"]
    for r in successes:
        assert r["kappa_achieved"] >= params["kappa"]
        assert r["M"] >= 10
        assert r["L"] >= 10
        assert r["hit_fraction"] > 1.0 - params["epsilon"]
        assert r["rho_distance"] <= params["xi_eff"] + tolerance
        assert r["diagnostics"] == []
