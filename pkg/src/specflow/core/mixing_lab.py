"""Weak-mixing and partial-rigidity diagnostics.

Oscillatory integrals ∫ e^{2πir f^(q)(x)} dx are computed cell by cell on the
partition cut by every discontinuity {β_i − kα} (k < q) of f^(q). Rigidity
statistics evaluate Birkhoff sums on an equispaced mesh refined at the jumps
of f.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
import structlog

from specflow._internal import fixed_point
from specflow._internal.quadrature import MAX_ORDER, cell_order, gauss_legendre
from specflow.core.birkhoff_core import birkhoff_sum
from specflow.core.cf_engine import alpha_fixed
from specflow.core.roof_algebra import decompose
from specflow.errors import HypothesisError, InvalidInputError, QuadratureError
from specflow.models.domain import CirclePoint
from specflow.models.reports import (
    BirkhoffHistogram,
    EtaRow,
    EtaTable,
    MixingPoint,
    MixingReport,
    OscillatoryIntegral,
    RigidityProfile,
)


if TYPE_CHECKING:
    from useful_types import SequenceNotStr

    from specflow.core.roof_algebra import RoofFunction
    from specflow.models.domain import ContinuedFraction
    from specflow.types import FloatArray, RawArray


log = structlog.get_logger()

_TWO_PI = 2.0 * math.pi
_FULL64 = 1 << 64
_ROUNDING = 1e-15


# ──────────────────────────────────────────────────────────────
# Oscillatory integrals
# ──────────────────────────────────────────────────────────────
def _cells(
    f: RoofFunction, alpha: ContinuedFraction, q: int
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Left ends, widths and pl-part values f_pl^(q)(l⁺) of every cell."""
    bits = alpha.bits
    m = fixed_point.mask(bits)
    full = 1 << bits
    a = alpha.alpha_raw
    betas = [
        (fixed_point.rescale(j.beta.raw, j.beta.bits, bits), j.d)
        for j in f.jumps.entries
    ]
    ac_cuts = [
        fixed_point.from_float(b, bits)
        for b in (() if f.ac.is_zero else f.ac.breakpoints)
    ]
    drops: dict[int, float] = defaultdict(float)
    for k in range(q):
        shift = k * a
        for beta, d in betas:
            drops[(beta - shift) & m] += d
        for cut in ac_cuts:
            drops.setdefault((cut - shift) & m, 0.0)
    starts = sorted({0, *drops})
    ends = [*starts[1:], full]

    # f_pl^(q) just right of 0, exact positions
    base = q * f.constant + math.fsum(
        d * fixed_point.to_float((k * a - beta) & m, bits)
        for k in range(q)
        for beta, d in betas
    )
    slope = q * f.S
    lefts, widths, bases = [], [], []
    for start, end in zip(starts, ends, strict=True):
        if start != 0:
            base -= drops.get(start, 0.0)
        width = (end - start) / full
        lefts.append(start / full)
        widths.append(width)
        bases.append(base)
        base += slope * width
    return np.array(lefts), np.array(widths), np.array(bases)


def _ac_sum(
    f: RoofFunction, alpha: ContinuedFraction, q: int, xs: FloatArray
) -> FloatArray:
    """Σ_{k<q} f_ac(x + kα) at float positions."""
    step = alpha.value
    out = np.zeros_like(xs)
    for k in range(q):
        out += f.ac.evaluate_array(np.mod(xs + (k * step) % 1.0, 1.0))
    return out


def oscillatory_integral(
    f: RoofFunction,
    alpha: ContinuedFraction,
    r: float,
    q: int,
    *,
    tolerance: float = 1e-8,
) -> OscillatoryIntegral:
    """∫₀¹ exp(2πi r f^(q)(x)) dx with an error estimate.

    Cells without a continuous part use the exact exponential integral.
    Otherwise each cell gets a Gauss–Legendre rule resolving its phase and
    the error is estimated against a rule eight orders higher.
    """
    if q < 1:
        raise InvalidInputError("q", f"{q} < 1")
    if r == 0:
        raise InvalidInputError("r", "must be nonzero")
    lefts, widths, bases = _cells(f, alpha, q)
    phi = _TWO_PI * r * q * f.S
    if f.ac.is_zero:
        rotation = np.exp(1j * _TWO_PI * r * bases)
        small = np.abs(phi * widths) < 1e-8
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(
                small,
                widths * (1.0 + 0.5j * phi * widths),
                (np.exp(1j * phi * widths) - 1.0) / (1j * phi if phi != 0 else 1.0),
            )
        value = complex(np.sum(rotation * factor))
        return OscillatoryIntegral(value, _ROUNDING * (1 + lefts.size), lefts.size, 0)

    rate = _TWO_PI * abs(r) * q * (abs(f.S) + f.ac.max_abs_derivative())
    orders = np.array([min(cell_order(rate, w), MAX_ORDER - 8) for w in widths])
    value = 0j
    error = 0.0
    for order in np.unique(orders):
        sel = orders == order
        estimates = []
        for o in (int(order), int(order) + 8):
            nodes, weights = gauss_legendre(o)
            xs = lefts[sel, None] + widths[sel, None] * nodes[None, :]
            phase = bases[sel, None] + q * f.S * (xs - lefts[sel, None])
            phase = phase + _ac_sum(f, alpha, q, xs.ravel()).reshape(xs.shape)
            cell = np.exp(1j * _TWO_PI * r * phase) @ weights * widths[sel]
            estimates.append(cell)
        value += complex(np.sum(estimates[1]))
        error += float(np.sum(np.abs(estimates[1] - estimates[0])))
    error += _ROUNDING * (1 + lefts.size)
    if error > tolerance:
        raise QuadratureError(
            estimate=error,
            tolerance=tolerance,
            required_order=min(2 * int(orders.max()), MAX_ORDER),
        )
    return OscillatoryIntegral(value, error, lefts.size, int(orders.max()) + 8)


def weak_mixing_bound_check(
    f: RoofFunction,
    g_vn: RoofFunction,
    r_list: SequenceNotStr[float],
    q_list: SequenceNotStr[int],
    alpha: ContinuedFraction,
    *,
    margin: float = 0.05,
    tolerance: float = 1e-8,
) -> MixingReport:
    """Check |I_{r,q}| <= K/(π|r|S) + Var(h)/S + Var(g′)/(2π|r|S²q) on a grid.

    The zero-mean continuous part of f is removed first; with g the
    piecewise-linear part of g_vn the phase is g^(q) + h^(q) exactly, where
    h = f_pl − g_pl. S and K refer to g_vn.
    """
    if g_vn.jumps.tail_bound > 0.0:
        raise InvalidInputError("g_vn", "must have finitely many jumps")
    if not g_vn.in_class_u:
        raise HypothesisError("S(g_vn) != 0", "sum of jumps of g_vn vanishes")
    S = abs(g_vn.S)
    var_diff = (f - g_vn).variation()
    if var_diff >= S:
        raise HypothesisError(
            "Var(f - g_vn) < |S(g_vn)|", f"Var = {var_diff:.6g} >= |S| = {S:.6g}"
        )
    _, f_pl = decompose(f)
    _, g_pl = decompose(g_vn)
    var_h = (f_pl - g_pl).variation()
    K = len(g_vn.jumps)
    var_gp = g_vn.derivative_variation()

    points = []
    for r in r_list:
        for q in q_list:
            integral = oscillatory_integral(f_pl, alpha, r, q, tolerance=tolerance)
            bound = (
                K / (math.pi * abs(r) * S)
                + var_h / S
                + var_gp / (_TWO_PI * abs(r) * S * S * q)
            )
            point = MixingPoint(r, q, integral.magnitude, bound, integral.error_bound)
            if not point.within_bound:
                log.error(
                    "falsification_event",
                    contract="weak mixing bound",
                    r=r,
                    q=q,
                    magnitude=point.magnitude,
                    bound=bound,
                )
            points.append(point)

    bound_c = var_h / S + margin
    r0 = None
    for r in sorted(set(r_list), reverse=True):
        if all(p.magnitude < bound_c for p in points if p.r >= r):
            r0 = r
        else:
            break
    return MixingReport(
        points=tuple(points),
        bound_c=bound_c,
        var_h_over_S=var_h / S,
        K=K,
        S=S,
        var_g_prime=var_gp,
        empirical_r0=r0,
    )


# ──────────────────────────────────────────────────────────────
# Rigidity
# ──────────────────────────────────────────────────────────────
def _mesh(f: RoofFunction, grid_n: int) -> tuple[RawArray, list[int]]:
    """Midpoints (64-bit) and widths of the grid refined at f's breakpoints."""
    cuts = {k * _FULL64 // grid_n for k in range(grid_n)}
    cuts.update(fixed_point.rescale(r, f.bits, 64) for r in f.cell_starts())
    ordered = sorted(cuts)
    ends = [*ordered[1:], _FULL64]
    pairs = list(zip(ordered, ends, strict=True))
    mids = np.array([c + (e - c) // 2 for c, e in pairs], dtype=np.uint64)
    widths = [e - c for c, e in pairs]
    return mids, widths


def _sum_matrix(
    f: RoofFunction, alpha: ContinuedFraction, start: RawArray, j_max: int
) -> FloatArray:
    """Rows j = 0..j_max of f^(j) at the given positions."""
    step = np.uint64(alpha_fixed(alpha, 64))
    out = np.zeros((j_max + 1, start.size))
    pos = start.copy()
    for j in range(1, j_max + 1):
        out[j] = out[j - 1] + f.evaluate_raw64(pos)
        pos += step
    return out


def _running_sum(
    f: RoofFunction, alpha: ContinuedFraction, start: RawArray, n: int
) -> FloatArray:
    """f^(n) at the given positions, one row of memory."""
    step = np.uint64(alpha_fixed(alpha, 64))
    total = np.zeros(start.size)
    pos = start.copy()
    for _ in range(n):
        total += f.evaluate_raw64(pos)
        pos += step
    return total


def _j_window(t: float, epsilon: float, lower: float, upper: float) -> tuple[int, int]:
    """Integers j with (t − ε)/M < j < (t + ε)/m."""
    j_min = max(1, math.floor((t - epsilon) / upper) + 1)
    j_max = math.ceil((t + epsilon) / lower) - 1
    return j_min, j_max


def _mass(hit: np.ndarray, widths: list[int]) -> float:
    total = sum(w for w, h in zip(widths, hit, strict=True) if h)
    return float(Fraction(total, _FULL64))


def _check_rigidity_inputs(
    f: RoofFunction, epsilon: float, t_min: float
) -> tuple[float, float]:
    f.require_positive()
    lower, upper = f.bounds
    if not 0.0 < epsilon < lower:
        raise InvalidInputError("epsilon", f"need 0 < eps < inf f = {lower:.6g}")
    if t_min <= 2.0 * epsilon:
        raise InvalidInputError("t", f"need t > 2 eps = {2 * epsilon:.6g}")
    return lower, upper


def rigidity_statistic(
    f: RoofFunction, alpha: ContinuedFraction, t: float, epsilon: float, grid_n: int
) -> float:
    """Measure of {x : |f^(j)(x) − t| < ε for some j in the admissible window}."""
    lower, upper = _check_rigidity_inputs(f, epsilon, t)
    j_min, j_max = _j_window(t, epsilon, lower, upper)
    if j_max < j_min:
        return 0.0
    mids, widths = _mesh(f, grid_n)
    sums = _sum_matrix(f, alpha, mids, j_max)
    hit = np.any(np.abs(sums[j_min : j_max + 1] - t) < epsilon, axis=0)
    return _mass(hit, widths)


def partial_rigidity_scan(
    f: RoofFunction,
    alpha: ContinuedFraction,
    epsilon: float,
    t_min: float,
    t_max: float,
    steps: int,
    *,
    grid_n: int = 2000,
    x0: CirclePoint | None = None,
) -> RigidityProfile:
    """Rigidity statistic over a linear t-grid plus the times f^(q_n)(x₀)."""
    lower, upper = _check_rigidity_inputs(f, epsilon, t_min)
    if t_max < t_min or steps < 1:
        raise InvalidInputError("scan", "need t_min <= t_max and steps >= 1")
    x0 = x0 or CirclePoint.zero(alpha.bits)
    injected = []
    for n in range(alpha.depth + 1):
        q = alpha.q(n)
        if q * lower > t_max:
            break
        value = birkhoff_sum(f, alpha, x0, q)
        if t_min <= value <= t_max:
            injected.append(value)
    linear = np.linspace(t_min, t_max, steps).tolist()
    times = sorted({*linear, *injected})

    mids, widths = _mesh(f, grid_n)
    _, j_top = _j_window(t_max, epsilon, lower, upper)
    sums = _sum_matrix(f, alpha, mids, max(j_top, 1))
    masses, windows = [], []
    for t in times:
        j_min, j_max = _j_window(t, epsilon, lower, upper)
        windows.append((j_min, j_max))
        if j_max < j_min:
            masses.append(0.0)
            continue
        hit = np.any(np.abs(sums[j_min : j_max + 1] - t) < epsilon, axis=0)
        masses.append(_mass(hit, widths))
    profile = RigidityProfile(
        epsilon=epsilon,
        times=tuple(times),
        mass=tuple(masses),
        j_windows=tuple(windows),
        injected=tuple(sorted(set(injected))),
    )
    log.info("rigidity_scan", sup=profile.sup, argmax=profile.argmax, points=len(times))
    return profile


def rigidity_mass_bound(f: RoofFunction, epsilon: float, eta: int) -> float:
    """Upper bound 48·η·M·(m + Var f)·ε/(|S|·m²) + ε for the return mass."""
    lower, upper = f.bounds
    scale = 48.0 * eta * upper * (lower + f.variation()) / (abs(f.S) * lower**2)
    return scale * epsilon + epsilon


def eta_condition_check(
    f: RoofFunction, C1: float, C2: float, eps_grid: SequenceNotStr[float]
) -> EtaTable:
    """Minimal η(ε) with Σ_{i>η}|d_i| + tail < ε/(C₂/C₁ + 1) for each ε."""
    if not f.in_class_u:
        raise HypothesisError("S != 0", "sum of jumps vanishes; f is not in U")
    ratio = C2 / C1 + 1.0
    rows = []
    partial = False
    for eps in eps_grid:
        threshold = eps / ratio
        if f.jumps.tail_bound >= threshold:
            partial = True
            rows.append(EtaRow(eps, None, None))
            continue
        eta = next(
            n for n in range(len(f.jumps) + 1) if f.jumps.tail_after(n) < threshold
        )
        rows.append(EtaRow(eps, eta, eta * eps, rigidity_mass_bound(f, eps, eta)))
    if partial:
        log.warning("eta_table_partial", tail_bound=f.jumps.tail_bound)
    return EtaTable(tuple(rows), ratio, partial)


# ──────────────────────────────────────────────────────────────
# Distribution of Birkhoff sums
# ──────────────────────────────────────────────────────────────
def birkhoff_distribution_along_qn(
    h: RoofFunction,
    alpha: ContinuedFraction,
    n_index: int,
    samples: int,
    *,
    tau: float = 0.05,
    recentre: bool = True,
    bin_width: float | None = None,
) -> BirkhoffHistogram:
    """Histogram of h^(q_n)(x) − q_n∫h over equispaced x."""
    if samples < 1:
        raise InvalidInputError("samples", f"{samples} < 1")
    q = alpha.q(n_index)
    grid = (np.arange(samples, dtype=np.float64) + 0.5) / samples
    start = (grid * 2.0**64).astype(np.uint64)
    values = _running_sum(h, alpha, start, q)
    if recentre:
        values = values - q * h.integral()
    width = bin_width or min(tau / 4.0, 0.01)
    lo = math.floor(float(values.min()) / width) * width
    n_bins = max(1, math.ceil((float(values.max()) - lo) / width) + 1)
    edges = lo + width * np.arange(n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    inside = float(np.mean(np.abs(values) < tau))
    return BirkhoffHistogram(
        q=q,
        tau=tau,
        edges=tuple(float(e) for e in edges),
        masses=tuple(float(c) / samples for c in counts),
        mass_inside=inside,
        samples=samples,
    )
