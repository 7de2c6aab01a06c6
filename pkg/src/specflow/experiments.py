"""Experiment handlers behind the scenario runner.

Each handler takes the prepared inputs and its validated parameter model and
returns an ``ExperimentResult``: a JSON payload, an optional table for the
CSV output and the number of falsification events it saw.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import structlog

from specflow.core.birkhoff_core import (
    BirkhoffContext,
    birkhoff_sum,
    denjoy_koksma_sweep,
    flow_trajectory,
)
from specflow.core.cf_engine import (
    approximation_violations,
    ensure_depth,
    estimate_gap_constants,
    three_gap_partition,
)
from specflow.core.mixing_lab import (
    birkhoff_distribution_along_qn,
    eta_condition_check,
    partial_rigidity_scan,
    weak_mixing_bound_check,
)
from specflow.core.ratner_verifier import (
    RNG_ALGORITHM,
    ratner_population_experiment,
    trial_generator,
)
from specflow.core.roof_algebra import (
    ACComponent,
    RoofFunction,
    build_noncohomologous_example,
    decompose,
    perturbation_stability,
    von_neumann_approx,
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
    StabilityParams,
)
from specflow.models.domain import CirclePoint, SpecialFlowPoint


if TYPE_CHECKING:
    from pydantic import BaseModel

    from specflow.models.api import RoofSpec
    from specflow.models.domain import ContinuedFraction
    from specflow.types import ExperimentKind, JsonDict, TabularReport


log = structlog.get_logger()

# Sup of the rigidity profile counted as "bounded away from 1".
RIGIDITY_THRESHOLD = 0.9
_GAP_CONSTANT_RANGE = 500


@dataclass(frozen=True)
class Table:
    """Plain CSV projection for results without a report type of their own."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...] = ()

    def header(self) -> tuple[str, ...]:
        return self.columns

    def iter_rows(self) -> Iterator[tuple[Any, ...]]:
        yield from self.rows


@dataclass(frozen=True)
class ExperimentInput:
    alpha: ContinuedFraction
    roof: RoofFunction
    seed: int = 0


@dataclass(frozen=True)
class ExperimentResult:
    payload: JsonDict
    table: TabularReport | None = None
    falsifications: int = 0
    rng: str | None = None
    error_bound: float = 0.0


# ──────────────────────────────────────────────────────────────
# Roof construction
# ──────────────────────────────────────────────────────────────
def build_ac(spec: RoofSpec) -> ACComponent:
    if spec.ac is not None:
        return ACComponent(
            tuple(spec.ac.breakpoints),
            tuple(tuple(c) for c in spec.ac.coefficients),
        )
    if spec.named_ac is not None:
        builder = {"tent": ACComponent.tent, "cubic_bump": ACComponent.cubic_bump}
        return builder[spec.named_ac.kind](spec.named_ac.amplitude)
    return ACComponent.zero()


def build_roof(spec: RoofSpec, alpha: ContinuedFraction) -> RoofFunction:
    """Domain roof from its scenario description."""
    ac = build_ac(spec)
    if spec.noncohomologous is not None:
        nc = spec.noncohomologous
        base = build_noncohomologous_example(
            nc.base_jump,
            lambda i: nc.ratio ** (i - 1),
            alpha=alpha,
            max_jumps=nc.max_jumps,
            constant=nc.constant,
        )
        return RoofFunction(base.jumps, ac, base.constant + spec.constant)
    return RoofFunction.from_jumps(
        [(j.beta, j.d) for j in spec.jumps],
        constant=spec.constant,
        ac=ac,
        tail_bound=spec.tail_bound,
        bits=alpha.bits,
    )


# ──────────────────────────────────────────────────────────────
# Handlers
# ──────────────────────────────────────────────────────────────
def run_cf(inp: ExperimentInput, params: CFParams) -> ExperimentResult:
    cf = ensure_depth(inp.alpha, params.depth)
    violations = approximation_violations(cf)
    rows = tuple(
        (n, cf.quotients[n - 1], str(cf.p(n)), str(cf.q(n)))
        for n in range(1, params.depth + 1)
    )
    payload = {"expansion": cf.to_dict(), "violations": list(violations)}
    return ExperimentResult(
        payload, Table(("n", "a_n", "p_n", "q_n"), rows), len(violations)
    )


def run_gaps(inp: ExperimentInput, params: GapsParams) -> ExperimentResult:
    c1, c2 = estimate_gap_constants(inp.alpha, params.k_max)
    rows = []
    failures = []
    for k in range(1, params.k_max + 1):
        part = three_gap_partition(inp.alpha, k)
        distinct = len(part.distinct())
        rows.append((k, distinct, part.min_gap, part.max_gap))
        if distinct > 3 or not c2 / k <= part.min_gap or not part.max_gap < c1 / k:
            failures.append(k)
            log.error("falsification_event", contract="three gap", k=k)
    payload = {
        "C1": c1,
        "C2": c2,
        "k_max": params.k_max,
        "failures": failures,
        "profile": [list(r) for r in rows],
    }
    columns = ("k", "distinct", "min_gap", "max_gap")
    return ExperimentResult(payload, Table(columns, tuple(rows)), len(failures))


def run_birkhoff(inp: ExperimentInput, params: BirkhoffParams) -> ExperimentResult:
    x = CirclePoint.parse(params.x, inp.alpha.bits)
    context = BirkhoffContext()
    rows = tuple(
        (n, birkhoff_sum(inp.roof, inp.alpha, x, n, context=context))
        for n in range(1, params.n + 1)
    )
    payload: JsonDict = {
        "x": x.to_decimal(),
        "n": params.n,
        "series": [list(r) for r in rows],
    }
    if params.times:
        start = SpecialFlowPoint(x, 0.0)
        trajectory = flow_trajectory(inp.roof, inp.alpha, start, params.times)
        payload["trajectory"] = [list(r) for r in trajectory]
    return ExperimentResult(
        payload,
        Table(("n", "birkhoff_sum"), rows),
        error_bound=context.max_error_bound,
    )


def run_dk(inp: ExperimentInput, params: DKParams) -> ExperimentResult:
    alpha = ensure_depth(inp.alpha, params.n_max + 1)
    points = [
        CirclePoint.from_float(float(trial_generator(inp.seed, i).random()), alpha.bits)
        for i in range(params.points)
    ]
    sweep = denjoy_koksma_sweep(inp.roof, alpha, points, range(1, params.n_max + 1))
    return ExperimentResult(
        sweep.to_dict(), sweep, sweep.violations, rng=RNG_ALGORITHM
    )


def run_ratner(inp: ExperimentInput, params: RatnerParamsModel) -> ExperimentResult:
    summary = ratner_population_experiment(
        inp.roof,
        inp.alpha,
        params.epsilon,
        params.N,
        params.trials,
        inp.seed,
        jobs=params.jobs,
    )
    payload = summary.to_dict()
    first = next((r for r in summary.reports if r.success), None)
    payload["trace"] = [list(p) for p in first.trace] if first else []
    payload["band"] = {
        "rho": first.rho if first else None,
        "epsilon": params.epsilon,
    }
    return ExperimentResult(
        payload, summary, summary.falsification_count, rng=summary.rng
    )


def run_mixing(inp: ExperimentInput, params: MixingParams) -> ExperimentResult:
    alpha = ensure_depth(inp.alpha, max(params.q_indices, default=1) + 1)
    g_vn = build_roof(params.g_vn, alpha) if params.g_vn else inp.roof
    q_list = [alpha.q(i) for i in params.q_indices]
    report = weak_mixing_bound_check(
        inp.roof,
        g_vn,
        params.r_list,
        q_list,
        alpha,
        margin=params.margin,
        tolerance=params.tolerance,
    )
    error = max((p.error_bound for p in report.points), default=0.0)
    return ExperimentResult(
        report.to_dict(), report, report.violations, error_bound=error
    )


def run_rigidity(inp: ExperimentInput, params: RigidityParams) -> ExperimentResult:
    profile = partial_rigidity_scan(
        inp.roof,
        inp.alpha,
        params.epsilon,
        params.t_min,
        params.t_max,
        params.steps,
        grid_n=params.grid_n,
    )
    payload = profile.to_dict()
    payload["threshold"] = RIGIDITY_THRESHOLD
    payload["below_threshold"] = profile.sup <= RIGIDITY_THRESHOLD
    if params.eps_grid:
        if params.C1 is None or params.C2 is None:
            c1, c2 = estimate_gap_constants(inp.alpha, _GAP_CONSTANT_RANGE)
        else:
            c1, c2 = params.C1, params.C2
        payload["eta_table"] = eta_condition_check(
            inp.roof, c1, c2, params.eps_grid
        ).to_dict()
    return ExperimentResult(payload, profile)


def _distribution_target(
    inp: ExperimentInput, params: DistributionParams
) -> RoofFunction:
    if params.ac_only:
        f_ac, _ = decompose(inp.roof)
        return RoofFunction(ac=f_ac)
    if params.subtract_von_neumann is not None:
        return inp.roof - von_neumann_approx(inp.roof, params.subtract_von_neumann)
    return inp.roof


def run_distribution(
    inp: ExperimentInput, params: DistributionParams
) -> ExperimentResult:
    alpha = ensure_depth(inp.alpha, max(params.n_indices, default=1) + 1)
    h = _distribution_target(inp, params)
    histograms = [
        birkhoff_distribution_along_qn(
            h, alpha, n, params.samples, tau=params.tau, recentre=params.recentre
        )
        for n in params.n_indices
    ]
    zeta = min((hist.mass_outside for hist in histograms), default=0.0)
    rows = tuple(
        (hist.q, left, mass) for hist in histograms for left, mass in hist.iter_rows()
    )
    payload = {
        "tau": params.tau,
        "zeta": zeta,
        "histograms": [hist.to_dict() for hist in histograms],
    }
    return ExperimentResult(payload, Table(("q", "bin_left", "mass"), rows))


def run_stability(inp: ExperimentInput, params: StabilityParams) -> ExperimentResult:
    g = build_roof(params.g, inp.alpha)
    cert = perturbation_stability(inp.roof, g, C=inp.alpha.C)
    falsified = int(cert.stable and not cert.reverified)
    data = cert.to_dict()
    table = Table(tuple(data), (tuple("" if v is None else v for v in data.values()),))
    return ExperimentResult(data, table, falsified)


Handler = Callable[[ExperimentInput, Any], ExperimentResult]

HANDLERS: dict[ExperimentKind, tuple[type[BaseModel], Handler]] = {
    "cf": (CFParams, run_cf),
    "gaps": (GapsParams, run_gaps),
    "birkhoff": (BirkhoffParams, run_birkhoff),
    "dk": (DKParams, run_dk),
    "ratner": (RatnerParamsModel, run_ratner),
    "mixing": (MixingParams, run_mixing),
    "rigidity": (RigidityParams, run_rigidity),
    "distribution": (DistributionParams, run_distribution),
    "stability": (StabilityParams, run_stability),
}
