"""Constants and searches of the drift (Ratner) argument.

For a roof f with S ≠ 0 and nearby x, y the difference of Birkhoff sums
g(n) = f^(n)(y) − f^(n)(x) grows linearly with slope S·{y − x} and jumps by
−d_i whenever an orbit point {β_i − jα} enters (x, y]. On a scale
[q_s, q_{s+1}] matched to ‖x − y‖ there is a long window where g stays
within ε of a single value ρ = (sgn S)p − Σ m_i d_i.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np
import structlog

from specflow._internal import fixed_point
from specflow.config import get_config
from specflow.core.birkhoff_core import (
    BirkhoffContext,
    equicontinuity_threshold,
    hit_indicator,
)
from specflow.core.roof_algebra import decompose, drift_window
from specflow.errors import (
    HypothesisError,
    InsufficientDepthError,
    InvalidInputError,
    PrecisionError,
    TruncationError,
)
from specflow.models.domain import CirclePoint
from specflow.models.reports import DriftReport, PopulationSummary, RatnerParams


if TYPE_CHECKING:
    from specflow.core.roof_algebra import RoofFunction
    from specflow.models.domain import ContinuedFraction
    from specflow.types import FloatArray


log = structlog.get_logger()

RNG_ALGORITHM = "philox4x64"


# ──────────────────────────────────────────────────────────────
# Constant chain
# ──────────────────────────────────────────────────────────────
def compute_m_eps(f: RoofFunction, epsilon: float, C: int) -> int:
    """Smallest m with Σ_{i>m}|d_i| + tail_bound < ε/(4(2C+1))."""
    if epsilon <= 0:
        raise InvalidInputError("epsilon", f"{epsilon} <= 0")
    if not f.in_class_u:
        raise HypothesisError("S != 0", "sum of jumps vanishes; f is not in U")
    threshold = epsilon / (4.0 * (2 * C + 1))
    if f.jumps.tail_bound >= threshold:
        raise TruncationError(requested=threshold, achievable=f.jumps.tail_bound)
    for m in range(1, len(f.jumps) + 1):
        if f.jumps.tail_after(m) < threshold:
            return m
    return len(f.jumps)


def compute_kappa(epsilon: float, m_eps: int, C: int, p: float) -> float:
    """κ(ε) = (1/(m(ε)(2C+1)))·min{ε/(2pC), 1/C²}."""
    if min(epsilon, p) <= 0 or min(m_eps, C) < 1:
        raise InvalidInputError("kappa inputs", "all inputs must be positive")
    return min(epsilon / (2.0 * p * C), 1.0 / (C * C)) / (m_eps * (2 * C + 1))


def compute_delta(
    p: float,
    S: float,
    alpha: ContinuedFraction,
    kappa: float,
    N: int,
    *,
    s_min: int = 1,
) -> tuple[float, int]:
    """Smallest s0 >= s_min with min(κ, 1)·q_{s0} > N, and δ = p/(|S|q_{s0+1})."""
    if S == 0:
        raise HypothesisError("S != 0", "sum of jumps vanishes")
    factor = min(kappa, 1.0)
    for s0 in range(s_min, alpha.depth):
        if factor * alpha.q(s0) > N:
            return p / (abs(S) * alpha.q(s0 + 1)), s0
    raise InsufficientDepthError(required=alpha.depth + 1, available=alpha.depth)


def scale_select(
    x: CirclePoint,
    y: CirclePoint,
    p: float,
    S: float,
    alpha: ContinuedFraction,
    *,
    delta: float | None = None,
) -> int:
    """The s with p/(|S|q_{s+1}) < ‖x − y‖ <= p/(|S|q_s)."""
    dist = x.distance(y)
    if dist == 0.0:
        raise InvalidInputError("pair", "x and y coincide")
    if delta is not None and dist >= delta:
        raise InvalidInputError("pair", f"distance {dist:.6g} >= delta {delta:.6g}")
    scale = p / abs(S)
    if dist > scale / alpha.q(0):
        raise InvalidInputError("pair", f"distance {dist:.6g} above p/|S|")
    s = 0
    for n in range(alpha.depth + 1):
        if dist <= scale / alpha.q(n):
            s = n
        else:
            break
    if s + 1 > alpha.depth:
        raise InsufficientDepthError(required=s + 1, available=alpha.depth)
    return s


def build_ratner_params(
    f: RoofFunction, alpha: ContinuedFraction, epsilon: float, N: int
) -> RatnerParams:
    """Window (p, η), m(ε), κ(ε), the equicontinuity scale and (δ, s0)."""
    C = alpha.C
    window = drift_window(f, C)
    dset = window.drift_set
    m_eps = compute_m_eps(f, epsilon, C)
    kappa = compute_kappa(epsilon, m_eps, C, window.p)
    f_ac, _ = decompose(f)
    s_min = equicontinuity_threshold(f_ac, alpha, epsilon / 4.0)
    delta, s0 = compute_delta(window.p, f.S, alpha, kappa, N, s_min=s_min)
    xi_eff = max(dset.xi, (2 * C + 1) * f.jumps.tail_after(dset.j))
    params = RatnerParams(
        epsilon=epsilon,
        N=N,
        m_eps=m_eps,
        kappa=kappa,
        delta=delta,
        p=window.p,
        eta=window.eta,
        C=C,
        s0=s0,
        S=f.S,
        j=dset.j,
        theta=dset.theta,
        xi=dset.xi,
        xi_eff=xi_eff,
        s_min=s_min,
        drift_set=dset.values,
    )
    log.info(
        "ratner_params",
        m_eps=m_eps,
        kappa=kappa,
        delta=delta,
        s0=s0,
        p=window.p,
        s_min=s_min,
    )
    return params


# ──────────────────────────────────────────────────────────────
# Drift search
# ──────────────────────────────────────────────────────────────
def _distance_to_set(values: tuple[float, ...], target: float) -> float:
    if not values:
        return math.inf
    return float(np.min(np.abs(np.asarray(values) - target)))


def _longest_constant_run(mask: np.ndarray, level: FloatArray) -> tuple[int, int]:
    """(start, length) of the longest run in ``mask`` with ``level`` constant."""
    best = (0, 0)
    start: int | None = None
    for i in range(mask.size + 1):
        inside = i < mask.size and bool(mask[i])
        if start is not None and (not inside or level[i] != level[start]):
            if i - start > best[1]:
                best = (start, i - start)
            start = None
        if inside and start is None:
            start = i
    return best


def find_drift_interval(
    f: RoofFunction,
    alpha: ContinuedFraction,
    x: CirclePoint,
    y: CirclePoint,
    params: RatnerParams,
    *,
    context: BirkhoffContext | None = None,
) -> DriftReport:
    """Drift interval J = [M, M + L] ⊂ [q_s, q_{s+1}] and the in-band share on it.

    J is fixed by geometry alone: the n with |n·|S|·‖x − y‖ − p| < ε/2, cut
    wherever one of the m(ε) largest jumps gains a hit in (x, y], keeping the
    longest piece. ρ = (sgn S)p − d̄_M, and ``hit_fraction`` is the share of
    n ∈ J with |g(n) − ρ| < ε, so the remaining jumps, the continuous part
    and rounding all show up in it.
    """
    if x.raw == y.raw:
        raise InvalidInputError("pair", "x and y coincide")
    context = context or BirkhoffContext()
    bits = alpha.bits
    swapped = fixed_point.arc(x.raw, y.raw, bits) > (1 << (bits - 1))
    lo, hi = (y, x) if swapped else (x, y)

    s = scale_select(lo, hi, params.p, params.S, alpha, delta=params.delta)
    q_s, q_next = alpha.q(s), alpha.q(s + 1)
    eps = params.epsilon
    dist = fixed_point.to_float(fixed_point.arc(lo.raw, hi.raw, bits), bits)

    ns = np.arange(q_s, q_next + 1, dtype=np.float64)
    in_window = np.abs(ns * abs(params.S) * dist - params.p) < eps / 2.0
    per_step = np.zeros(q_next)
    per_step_major = np.zeros(q_next)
    for rank, jump in enumerate(f.jumps.entries):
        hits = jump.d * hit_indicator(alpha, jump.beta, lo, hi, q_next)
        per_step += hits
        if rank < params.m_eps:
            per_step_major += hits
    dbar = np.concatenate(([0.0], np.cumsum(per_step)))[q_s : q_next + 1]
    major = np.concatenate(([0.0], np.cumsum(per_step_major)))[q_s : q_next + 1]
    start, length = _longest_constant_run(in_window, major)

    if length < 2:
        log.warning(
            "drift_interval_missing",
            s=s,
            distance=dist,
            window=int(in_window.sum()),
        )
        return DriftReport(
            s=s,
            M=q_s,
            L=0,
            rho=float(params.sign * params.p - dbar[0]),
            hit_fraction=0.0,
            dbar_at_M=float(dbar[0]),
            epsilon=eps,
            N=params.N,
            swapped=swapped,
            diagnostics=("no drift window of length >= 2 in [q_s, q_{s+1}]",),
        )

    M = q_s + start
    L = length - 1
    upper = context.ledger(f, alpha, hi).values(M, M + length)
    lower = context.ledger(f, alpha, lo).values(M, M + length)
    window = upper - lower
    rho = float(params.sign * params.p - dbar[start])
    hit_fraction = float(np.mean(np.abs(window - rho) < eps))
    rho_distance = _distance_to_set(params.drift_set, float(dbar[start]))
    trace = tuple((M + k, float(v)) for k, v in enumerate(window))
    report = DriftReport(
        s=s,
        M=M,
        L=L,
        rho=rho,
        hit_fraction=hit_fraction,
        dbar_at_M=float(dbar[start]),
        epsilon=eps,
        N=params.N,
        swapped=swapped,
        rho_distance=rho_distance,
        trace=trace,
    )
    violated = report.violations(params, rho_tolerance=get_config().rho_tolerance)
    if violated:
        log.error(
            "falsification_event",
            contract="drift interval",
            violations=list(violated),
            M=M,
            L=L,
            s=s,
        )
        report = replace(report, diagnostics=violated)
    elif not report.success:
        log.info("drift_interval_short", M=M, L=L, N=params.N, s=s)
    return report


# ──────────────────────────────────────────────────────────────
# Population experiment
# ──────────────────────────────────────────────────────────────
def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of scheduling."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(trial + 1))


def sample_pair(
    seed: int, trial: int, delta: float, bits: int
) -> tuple[CirclePoint, CirclePoint]:
    """x uniform on the circle and y at a uniform distance in (0, δ), either side."""
    rng = trial_generator(seed, trial)
    x = CirclePoint.from_float(float(rng.random()), bits)
    dist = 0.0
    while dist == 0.0:
        dist = float(rng.uniform(0.0, delta))
    offset = CirclePoint.from_float(dist, bits)
    y = x + offset if rng.random() < 0.5 else x - offset
    return x, y


def _run_trial(
    args: tuple[RoofFunction, ContinuedFraction, RatnerParams, int, int],
) -> DriftReport:
    f, alpha, params, seed, trial = args
    x, y = sample_pair(seed, trial, params.delta, alpha.bits)
    try:
        return find_drift_interval(f, alpha, x, y, params, context=BirkhoffContext())
    except PrecisionError as exc:
        log.warning("trial_precision_exhausted", trial=trial, error=str(exc))
        return DriftReport(
            s=0,
            M=0,
            L=0,
            rho=0.0,
            hit_fraction=0.0,
            dbar_at_M=0.0,
            epsilon=params.epsilon,
            N=params.N,
            diagnostics=(str(exc),),
        )


def ratner_population_experiment(
    f: RoofFunction,
    alpha: ContinuedFraction,
    epsilon: float,
    N: int,
    trials: int,
    seed: int,
    *,
    jobs: int = 1,
) -> PopulationSummary:
    """Success fraction of drift searches over seeded random pairs.

    Trials are independent; with ``jobs`` > 1 they run in worker processes
    and are merged by trial index, so the summary does not depend on ``jobs``.
    """
    if trials < 0:
        raise InvalidInputError("trials", f"{trials} < 0")
    if trials == 0:
        return PopulationSummary(params=None, trials=0, seed=seed, rng=RNG_ALGORITHM)
    f.require_positive()
    params = build_ratner_params(f, alpha, epsilon, N)
    work = [(f, alpha, params, seed, i) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = tuple(pool.map(_run_trial, work))
    else:
        reports = tuple(_run_trial(w) for w in work)
    tol = get_config().rho_tolerance
    falsifications = sum(1 for r in reports if r.violations(params, rho_tolerance=tol))
    summary = PopulationSummary(
        params=params,
        trials=trials,
        reports=reports,
        falsification_count=falsifications,
        seed=seed,
        rng=RNG_ALGORITHM,
    )
    log.info(
        "population_done",
        trials=trials,
        success_fraction=summary.success_fraction,
        falsifications=falsifications,
    )
    return summary
