"""Birkhoff sums, the special flow and jump counting.

Orbit positions stay exact (integers over 2**bits); values are float64
accumulated with compensated summation so every cached sum carries an error
bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import structlog

from specflow._internal import fixed_point
from specflow._internal.compensated import CompensatedSum
from specflow.config import get_config
from specflow.core.cf_engine import alpha_fixed
from specflow.errors import (
    CapExceededError,
    ConsistencyError,
    InsufficientDepthError,
    InvalidInputError,
)
from specflow.models.domain import CirclePoint, ContinuedFraction, SpecialFlowPoint
from specflow.models.reports import DKSweep, DriftIdentity, HitCount


if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from specflow.core.roof_algebra import ACComponent, RoofFunction
    from specflow.types import FloatArray


log = structlog.get_logger()

_CHUNK = 4096
_SCAN_LIMIT = 100_000


# ──────────────────────────────────────────────────────────────
# Ledgers
# ──────────────────────────────────────────────────────────────
@dataclass
class BirkhoffLedger:
    """Cached f^(n)(x) for a contiguous range of n around 0.

    ``forward[n]`` is f^(n)(x) and ``backward[n]`` is f^(−n)(x), both with
    f^(0) = 0.
    """

    f: RoofFunction
    alpha: ContinuedFraction
    x: CirclePoint
    forward: list[float] = field(default_factory=lambda: [0.0])
    backward: list[float] = field(default_factory=lambda: [0.0])
    forward_positions: list[int] = field(default_factory=list)
    _fwd: CompensatedSum = field(default_factory=CompensatedSum)
    _bwd: CompensatedSum = field(default_factory=CompensatedSum)

    def __post_init__(self) -> None:
        if self.x.bits != self.alpha.bits:
            raise InvalidInputError("point", "precision differs from alpha")
        self.forward_positions.append(self.x.raw)

    @property
    def error_bound(self) -> float:
        return max(self._fwd.error_bound, self._bwd.error_bound)

    def _extend_forward(self, n: int) -> None:
        m = fixed_point.mask(self.alpha.bits)
        a = self.alpha.alpha_raw
        while len(self.forward) <= n:
            start = self.forward_positions[-1]
            count = min(_CHUNK, n + 1 - len(self.forward))
            raws = [(start + k * a) & m for k in range(count + 1)]
            values = self.f.evaluate_many(raws[:-1])
            for v in values:
                self.forward.append(self._fwd.add(float(v)))
            self.forward_positions.extend(raws[1:])

    def _extend_backward(self, n: int) -> None:
        m = fixed_point.mask(self.alpha.bits)
        a = self.alpha.alpha_raw
        while len(self.backward) <= n:
            done = len(self.backward) - 1
            count = min(_CHUNK, n - done)
            raws = [(self.x.raw - (done + k) * a) & m for k in range(1, count + 1)]
            for v in self.f.evaluate_many(raws):
                self._bwd.add(float(v))
                self.backward.append(-self._bwd.value)

    def value(self, n: int) -> float:
        cap = get_config().birkhoff_cap
        if abs(n) > cap:
            raise CapExceededError("|n|", abs(n), cap)
        if n >= 0:
            self._extend_forward(n)
            return self.forward[n]
        self._extend_backward(-n)
        return self.backward[-n]

    def values(self, start: int, stop: int) -> FloatArray:
        """f^(n)(x) for start <= n < stop (n >= 0)."""
        if start < 0:
            raise InvalidInputError("range", "values() covers n >= 0 only")
        if stop > start:
            self.value(stop - 1)
        return np.asarray(self.forward[start:stop], dtype=np.float64)

    def position(self, n: int) -> CirclePoint:
        """T^n x."""
        bits = self.alpha.bits
        raw = (self.x.raw + n * self.alpha.alpha_raw) & fixed_point.mask(bits)
        return CirclePoint(raw, bits)


class BirkhoffContext:
    """Owns the ledgers of one evaluation task.

    Contexts are not thread-safe and are never shared between concurrent
    trials; each trial builds its own.
    """

    def __init__(self) -> None:
        self._ledgers: dict[tuple[int, int, int, int], BirkhoffLedger] = {}

    def ledger(
        self, f: RoofFunction, alpha: ContinuedFraction, x: CirclePoint
    ) -> BirkhoffLedger:
        key = (id(f), alpha.alpha_raw, alpha.bits, x.raw)
        found = self._ledgers.get(key)
        if found is None or found.f is not f:
            found = BirkhoffLedger(f, alpha, x)
            self._ledgers[key] = found
        return found

    @property
    def max_error_bound(self) -> float:
        bounds = (ledger.error_bound for ledger in self._ledgers.values())
        return max(bounds, default=0.0)

    def __len__(self) -> int:
        return len(self._ledgers)


def _ledger(
    f: RoofFunction,
    alpha: ContinuedFraction,
    x: CirclePoint,
    context: BirkhoffContext | None,
) -> BirkhoffLedger:
    if context is None:
        return BirkhoffLedger(f, alpha, x)
    return context.ledger(f, alpha, x)


# ──────────────────────────────────────────────────────────────
# Sums and the flow
# ──────────────────────────────────────────────────────────────
def birkhoff_sum(
    f: RoofFunction,
    alpha: ContinuedFraction,
    x: CirclePoint,
    n: int,
    *,
    context: BirkhoffContext | None = None,
) -> float:
    """f^(n)(x): Σ_{k<n} f(x + kα) for n > 0, 0 for n = 0, −f^(−n)(x + nα) for n < 0."""
    if n == 0:
        return 0.0
    return _ledger(f, alpha, x, context).value(n)


def orbit_values(
    f: RoofFunction, alpha: ContinuedFraction, x: CirclePoint, n: int
) -> FloatArray:
    """f(T^k x) for 0 <= k < n at exact positions."""
    m = fixed_point.mask(alpha.bits)
    return f.evaluate_many([(x.raw + k * alpha.alpha_raw) & m for k in range(n)])


def _check_flow_point(f: RoofFunction, pt: SpecialFlowPoint) -> None:
    height = f.evaluate(pt.x)
    if not 0.0 <= pt.s < height:
        raise InvalidInputError("flow point", f"s={pt.s} outside [0, f(x)={height})")


def flow_map(
    f: RoofFunction,
    alpha: ContinuedFraction,
    pt: SpecialFlowPoint,
    t: float,
    *,
    context: BirkhoffContext | None = None,
) -> SpecialFlowPoint:
    """T_t^f(x, s) = (T^n x, s + t − f^(n)(x)) with f^(n)(x) <= s + t < f^(n+1)(x)."""
    f.require_positive()
    _check_flow_point(f, pt)
    cap = get_config().birkhoff_cap
    if abs(t) > cap * f.lower_bound:
        raise CapExceededError("|t|", abs(t), cap * f.lower_bound)
    if t == 0.0:
        return pt
    ledger = _ledger(f, alpha, pt.x, context)
    target = pt.s + t
    n = 0
    if target >= 0.0:
        while ledger.value(n + 1) <= target:
            n += 1
    else:
        while ledger.value(n) > target:
            n -= 1
    return SpecialFlowPoint(ledger.position(n), target - ledger.value(n))


def flow_trajectory(
    f: RoofFunction,
    alpha: ContinuedFraction,
    pt: SpecialFlowPoint,
    times: Iterable[float],
) -> tuple[tuple[float, str, float], ...]:
    """(t, x as exact decimal, s) rows of T_t^f(pt)."""
    context = BirkhoffContext()
    rows = []
    for t in times:
        image = flow_map(f, alpha, pt, t, context=context)
        rows.append((t, image.x.to_decimal(), image.s))
    return tuple(rows)


# ──────────────────────────────────────────────────────────────
# Denjoy–Koksma
# ──────────────────────────────────────────────────────────────
def denjoy_koksma_residual(
    f: RoofFunction,
    alpha: ContinuedFraction,
    x: CirclePoint,
    n_index: int,
    *,
    context: BirkhoffContext | None = None,
) -> float:
    """|f^(q_n)(x) − q_n∫f|, bounded by Var f."""
    q = alpha.q(n_index)
    return abs(birkhoff_sum(f, alpha, x, q, context=context) - q * f.integral())


def denjoy_koksma_sweep(
    f: RoofFunction,
    alpha: ContinuedFraction,
    points: Sequence[CirclePoint],
    n_indices: Sequence[int],
) -> DKSweep:
    variation = f.variation()
    rows = []
    for x in points:
        context = BirkhoffContext()
        for n in n_indices:
            residual = denjoy_koksma_residual(f, alpha, x, n, context=context)
            rows.append((x.to_decimal(), n, alpha.q(n), residual))
            if residual > variation:
                log.error(
                    "falsification_event",
                    contract="denjoy-koksma",
                    x=x.to_decimal(),
                    n_index=n,
                    residual=residual,
                    variation=variation,
                )
    return DKSweep(variation, tuple(rows))


# ──────────────────────────────────────────────────────────────
# Jump counting and the drift identity
# ──────────────────────────────────────────────────────────────
def _boundary_threshold(bits: int) -> int:
    return max(1, 1 << max(bits - get_config().boundary_bits, 0))


def _hit_offsets(
    alpha: ContinuedFraction, beta: CirclePoint, x: CirclePoint, n: int
) -> list[int]:
    """Positive arc from x to {β − jα}, for 0 <= j < n."""
    m = fixed_point.mask(alpha.bits)
    base = beta.raw - x.raw
    a = alpha.alpha_raw
    return [(base - j * a) & m for j in range(n)]


def jump_hit_count(
    alpha: ContinuedFraction,
    beta: CirclePoint,
    x: CirclePoint,
    y: CirclePoint,
    n: int,
) -> HitCount:
    """#{0 <= j < n : {β − jα} ∈ (x, y]} along the positive arc from x to y."""
    if x.raw == y.raw:
        raise InvalidInputError("arc", "x and y coincide")
    if n < 0:
        raise InvalidInputError("n", f"{n} < 0")
    bits = alpha.bits
    full = 1 << bits
    arc = fixed_point.arc(x.raw, y.raw, bits)
    thr = _boundary_threshold(bits)
    count = 0
    critical = []
    for j, off in enumerate(_hit_offsets(alpha, beta, x, n)):
        if 0 < off <= arc:
            count += 1
        if off <= thr or full - off <= thr or abs(off - arc) <= thr:
            critical.append(j)
    return HitCount(count, tuple(critical))


def hit_indicator(
    alpha: ContinuedFraction, beta: CirclePoint, x: CirclePoint, y: CirclePoint, n: int
) -> FloatArray:
    """1.0 where {β − jα} ∈ (x, y], for 0 <= j < n."""
    arc = fixed_point.arc(x.raw, y.raw, alpha.bits)
    offsets = _hit_offsets(alpha, beta, x, n)
    return np.array([1.0 if 0 < off <= arc else 0.0 for off in offsets])


def identity_tolerance(f: RoofFunction, alpha: ContinuedFraction) -> float:
    """Configured tolerance widened by (2C + 1)·tail_bound for truncated roofs."""
    return get_config().identity_tolerance + f.jumps.tail_bound * (2 * alpha.C + 1)


def drift_identity(
    f_pl: RoofFunction,
    alpha: ContinuedFraction,
    x: CirclePoint,
    y: CirclePoint,
    n: int,
    *,
    context: BirkhoffContext | None = None,
    check: bool = True,
) -> DriftIdentity:
    """f_pl^(n)(y) − f_pl^(n)(x) against nS·{y − x} − Σ m_i d_i.

    {y − x} is the positive arc from x to y and m_i counts {β_i − jα} in
    (x, y] for j < n.
    """
    if not f_pl.ac.is_zero:
        raise InvalidInputError("f_pl", "absolutely continuous part must vanish")
    if x.raw == y.raw:
        raise InvalidInputError("arc", "x and y coincide")
    if n == 0:
        return DriftIdentity(0.0, 0.0, 0.0)
    lhs = birkhoff_sum(f_pl, alpha, y, n, context=context) - birkhoff_sum(
        f_pl, alpha, x, n, context=context
    )
    delta = fixed_point.to_float(fixed_point.arc(x.raw, y.raw, alpha.bits), alpha.bits)
    linear = n * f_pl.S * delta
    counts = [jump_hit_count(alpha, j.beta, x, y, n) for j in f_pl.jumps.entries]
    pairs = zip(counts, f_pl.jumps.entries, strict=True)
    dbar = math.fsum(c.count * j.d for c, j in pairs)
    tol = identity_tolerance(f_pl, alpha)
    result = DriftIdentity(
        lhs,
        linear,
        dbar,
        tuple(c.count for c in counts),
        any(c.is_boundary_critical for c in counts),
        tol,
    )
    if check and result.residual > tol:
        raise ConsistencyError("drift identity", lhs, linear - dbar, tol)
    return result


# ──────────────────────────────────────────────────────────────
# Equicontinuity of the AC part
# ──────────────────────────────────────────────────────────────
def ac_equicontinuity_scan(
    f_ac: ACComponent, alpha: ContinuedFraction, s: int, samples: int
) -> float:
    """Sampled sup over n < q_{s+1} and ‖y − x‖ < 1/q_s of |f_ac^(n)(y) − f_ac^(n)(x)|.

    x runs over an equispaced grid and y − x over a fixed set of offsets
    inside (−1/q_s, 1/q_s).
    """
    if f_ac.is_zero:
        return 0.0
    if abs(f_ac.mean()) > 1e-9:
        raise InvalidInputError("f_ac", "must have zero mean")
    if samples < 1:
        raise InvalidInputError("samples", f"{samples} < 1")
    q_s, q_next = alpha.q(s), alpha.q(s + 1)
    step = np.uint64(alpha_fixed(alpha, 64))
    xs = (np.arange(samples, dtype=np.float64) + 0.5) / samples
    x64 = (xs * 2.0**64).astype(np.uint64)
    best = 0.0
    for frac in (-0.999, -0.5, -0.25, 0.25, 0.5, 0.999):
        shift = np.uint64(int((frac / q_s % 1.0) * 2.0**64) & ((1 << 64) - 1))
        pos_x = x64.copy()
        pos_y = x64 + shift
        acc = np.zeros(samples)
        for _ in range(q_next):
            at_y = f_ac.evaluate_array(fixed_point.unit_interval(pos_y))
            at_x = f_ac.evaluate_array(fixed_point.unit_interval(pos_x))
            acc += at_y - at_x
            best = max(best, float(np.max(np.abs(acc))))
            pos_x += step
            pos_y += step
    return best


def equicontinuity_threshold(
    f_ac: ACComponent,
    alpha: ContinuedFraction,
    bound: float,
    samples: int = 64,
    *,
    scan_limit: int = _SCAN_LIMIT,
) -> int:
    """Smallest s >= 1 whose sampled scan falls below ``bound``.

    Raises:
        CapExceededError: q_{s+1} passes ``scan_limit`` before the bound is met
        InsufficientDepthError: the expansion ends before the bound is met
    """
    last = math.inf
    for s in range(1, alpha.depth):
        if alpha.q(s + 1) > scan_limit:
            log.warning(
                "equicontinuity_unmet",
                s=s,
                bound=bound,
                last_scan=last,
                scan_limit=scan_limit,
            )
            raise CapExceededError(
                "q_{s+1} of the equicontinuity scan", alpha.q(s + 1), scan_limit
            )
        last = ac_equicontinuity_scan(f_ac, alpha, s, samples)
        if last < bound:
            return s
    log.warning("equicontinuity_unmet", s=alpha.depth - 1, bound=bound, last_scan=last)
    raise InsufficientDepthError(required=alpha.depth + 1, available=alpha.depth)
