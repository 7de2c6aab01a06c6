"""Numerical core: continued fractions, roofs, Birkhoff sums and diagnostics."""

from __future__ import annotations

from .birkhoff_core import (
    BirkhoffContext,
    birkhoff_sum,
    denjoy_koksma_residual,
    denjoy_koksma_sweep,
    drift_identity,
    flow_map,
    flow_trajectory,
    jump_hit_count,
)
from .cf_engine import (
    approximation_violations,
    cf_expand,
    cf_expand_float,
    estimate_gap_constants,
    parse_quadratic,
    three_gap_partition,
    two_orbit_gap_constant,
)
from .mixing_lab import (
    birkhoff_distribution_along_qn,
    eta_condition_check,
    oscillatory_integral,
    partial_rigidity_scan,
    rigidity_statistic,
    weak_mixing_bound_check,
)
from .ratner_verifier import (
    build_ratner_params,
    find_drift_interval,
    ratner_population_experiment,
)
from .roof_algebra import (
    ACComponent,
    RoofFunction,
    build_noncohomologous_example,
    drift_window,
    jump_sum_set_D,
    perturbation_stability,
    theta_condition,
    von_neumann_approx,
)


__all__ = [
    "ACComponent",
    "BirkhoffContext",
    "RoofFunction",
    "approximation_violations",
    "birkhoff_distribution_along_qn",
    "birkhoff_sum",
    "build_noncohomologous_example",
    "build_ratner_params",
    "cf_expand",
    "cf_expand_float",
    "denjoy_koksma_residual",
    "denjoy_koksma_sweep",
    "drift_identity",
    "drift_window",
    "estimate_gap_constants",
    "eta_condition_check",
    "find_drift_interval",
    "flow_map",
    "flow_trajectory",
    "jump_hit_count",
    "jump_sum_set_D",
    "oscillatory_integral",
    "parse_quadratic",
    "partial_rigidity_scan",
    "perturbation_stability",
    "ratner_population_experiment",
    "rigidity_statistic",
    "theta_condition",
    "three_gap_partition",
    "two_orbit_gap_constant",
    "von_neumann_approx",
    "weak_mixing_bound_check",
]
