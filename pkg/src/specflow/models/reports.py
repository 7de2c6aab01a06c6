"""Result records produced by the core modules.

All records are frozen; ``to_dict`` gives the JSON payload form and the
tabular ones also expose ``header``/``iter_rows`` for CSV emission.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np


if TYPE_CHECKING:
    from specflow.types import JsonDict

Cell = float | int | str


# ──────────────────────────────────────────────────────────────
# birkhoff_core
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class HitCount:
    """#{0 <= j < n : {β − jα} ∈ (x, y]} and the indices j landing near x or y."""

    count: int
    boundary_critical: tuple[int, ...] = ()

    @property
    def is_boundary_critical(self) -> bool:
        return bool(self.boundary_critical)


@dataclass(frozen=True)
class DriftIdentity:
    """Both sides of f^(n)(y) − f^(n)(x) = nS·{y − x} − Σ m_i d_i."""

    lhs: float
    linear_term: float
    dbar: float
    hits: tuple[int, ...] = ()
    boundary_critical: bool = False
    tolerance: float = 0.0

    @property
    def within_tolerance(self) -> bool:
        return self.residual <= self.tolerance

    @property
    def residual(self) -> float:
        return abs(self.lhs - (self.linear_term - self.dbar))


@dataclass(frozen=True)
class DKSweep:
    """Denjoy–Koksma residuals |f^(q_n)(x) − q_n∫f| over sample points."""

    variation: float
    rows: tuple[tuple[str, int, int, float], ...]

    @property
    def max_residual(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if r[3] > self.variation)

    def header(self) -> tuple[str, ...]:
        return ("x", "n_index", "q_n", "residual")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        yield from self.rows

    def to_dict(self) -> JsonDict:
        return {
            "variation": self.variation,
            "max_residual": self.max_residual,
            "violations": self.violations,
            "rows": [list(r) for r in self.rows],
        }


# ──────────────────────────────────────────────────────────────
# ratner_verifier
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class RatnerParams:
    """The constant chain of the drift argument for one (f, α, ε, N)."""

    epsilon: float
    N: int
    m_eps: int
    kappa: float
    delta: float
    p: float
    eta: float
    C: int
    s0: int
    S: float
    j: int
    theta: float
    xi: float
    xi_eff: float
    s_min: int = 1
    drift_set: tuple[float, ...] = field(default=(), repr=False)

    @property
    def sign(self) -> int:
        return 1 if self.S > 0 else -1

    def to_dict(self) -> JsonDict:
        return {
            "epsilon": self.epsilon,
            "N": self.N,
            "m_eps": self.m_eps,
            "kappa": self.kappa,
            "delta": self.delta,
            "p": self.p,
            "eta": self.eta,
            "C": self.C,
            "s0": self.s0,
            "S": self.S,
            "j": self.j,
            "theta": self.theta,
            "xi": self.xi,
            "xi_eff": self.xi_eff,
            "s_min": self.s_min,
            "drift_set_size": len(self.drift_set),
        }


@dataclass(frozen=True)
class DriftReport:
    """Outcome of a drift-interval search on one pair of points.

    ``trace`` holds (n, f^(n)(y) − f^(n)(x)) for n in J = [M, M + L] and
    ``hit_fraction`` is the share of those n within ε of ρ. A search counts as a
    success once L reaches the required length N; shorter intervals mark an
    exceptional pair, not a broken contract.
    """

    s: int
    M: int
    L: int
    rho: float
    hit_fraction: float
    dbar_at_M: float
    epsilon: float
    N: int = 1
    swapped: bool = False
    rho_distance: float = 0.0
    diagnostics: tuple[str, ...] = ()
    trace: tuple[tuple[int, float], ...] = field(default=(), repr=False)

    @property
    def success(self) -> bool:
        return self.L >= max(self.N, 1)

    @property
    def kappa_achieved(self) -> float:
        return self.L / self.M if self.M else 0.0

    def hit_fraction_at(self, epsilon: float) -> float:
        """Share of n ∈ J with |g(n) − ρ| < epsilon."""
        if not self.trace:
            return 0.0
        values = np.array([v for _, v in self.trace])
        return float(np.mean(np.abs(values - self.rho) < epsilon))

    def violations(
        self, params: RatnerParams, *, rho_tolerance: float = 1e-8
    ) -> tuple[str, ...]:
        """Contracts a successful report must satisfy."""
        if not self.success:
            return ()
        found = []
        if self.kappa_achieved < params.kappa:
            found.append(f"L/M={self.kappa_achieved:.6g} < kappa={params.kappa:.6g}")
        if self.M < params.N:
            found.append(f"M={self.M} < N={params.N}")
        if not self.hit_fraction > 1.0 - params.epsilon:
            found.append(f"hit_fraction={self.hit_fraction:.6g} <= 1 - eps")
        if self.rho_distance > params.xi_eff + rho_tolerance:
            found.append(f"rho off the drift set by {self.rho_distance:.3g}")
        return tuple(found)

    def to_dict(self) -> JsonDict:
        return {
            "s": self.s,
            "M": self.M,
            "L": self.L,
            "N": self.N,
            "rho": self.rho,
            "hit_fraction": self.hit_fraction,
            "kappa_achieved": self.kappa_achieved,
            "dbar_at_M": self.dbar_at_M,
            "swapped": self.swapped,
            "rho_distance": self.rho_distance,
            "diagnostics": list(self.diagnostics),
        }


@dataclass(frozen=True)
class PopulationSummary:
    params: RatnerParams | None
    trials: int
    reports: tuple[DriftReport, ...] = ()
    falsification_count: int = 0
    seed: int = 0
    rng: str = "philox4x64"

    @property
    def successes(self) -> int:
        return sum(1 for r in self.reports if r.success)

    @property
    def success_fraction(self) -> float | None:
        if self.trials == 0:
            return None
        return self.successes / self.trials

    def kappa_margins(self) -> tuple[float, ...]:
        if self.params is None:
            return ()
        kappa = self.params.kappa
        return tuple(r.kappa_achieved - kappa for r in self.reports if r.success)

    def rhos(self) -> tuple[float, ...]:
        return tuple(r.rho for r in self.reports if r.success)

    def kappa_histogram(
        self, bins: int = 10
    ) -> tuple[tuple[float, ...], tuple[int, ...]]:
        margins = self.kappa_margins()
        if not margins:
            return (), ()
        counts, edges = np.histogram(margins, bins=bins)
        return tuple(float(e) for e in edges), tuple(int(c) for c in counts)

    def header(self) -> tuple[str, ...]:
        return ("trial", "s", "M", "L", "rho", "hit_fraction", "kappa_achieved")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        for i, r in enumerate(self.reports):
            yield (i, r.s, r.M, r.L, r.rho, r.hit_fraction, r.kappa_achieved)

    def to_dict(self) -> JsonDict:
        edges, counts = self.kappa_histogram()
        return {
            "params": self.params.to_dict() if self.params else None,
            "trials": self.trials,
            "seed": self.seed,
            "rng": self.rng,
            "success_fraction": self.success_fraction,
            "successes": self.successes,
            "falsification_count": self.falsification_count,
            "kappa_histogram": {"edges": list(edges), "counts": list(counts)},
            "rho_values": list(self.rhos()),
            "reports": [r.to_dict() for r in self.reports],
        }


# ──────────────────────────────────────────────────────────────
# mixing_lab
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class OscillatoryIntegral:
    value: complex
    error_bound: float
    cells: int = 0
    max_order: int = 0

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class MixingPoint:
    r: float
    q: int
    magnitude: float
    bound: float
    error_bound: float

    @property
    def within_bound(self) -> bool:
        return self.magnitude <= self.bound + self.error_bound


@dataclass(frozen=True)
class MixingReport:
    points: tuple[MixingPoint, ...]
    bound_c: float
    var_h_over_S: float
    K: int
    S: float
    var_g_prime: float
    empirical_r0: float | None = None

    @property
    def grid(self) -> tuple[tuple[float, int], ...]:
        return tuple((p.r, p.q) for p in self.points)

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(p.magnitude for p in self.points)

    @property
    def violations(self) -> int:
        return sum(1 for p in self.points if not p.within_bound)

    def header(self) -> tuple[str, ...]:
        return ("r", "q", "magnitude", "bound", "error_bound")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        for p in self.points:
            yield (p.r, p.q, p.magnitude, p.bound, p.error_bound)

    def to_dict(self) -> JsonDict:
        return {
            "bound_c": self.bound_c,
            "var_h_over_S": self.var_h_over_S,
            "K": self.K,
            "S": self.S,
            "var_g_prime": self.var_g_prime,
            "empirical_r0": self.empirical_r0,
            "violations": self.violations,
            "grid": [list(row) for row in self.iter_rows()],
        }


@dataclass(frozen=True)
class RigidityProfile:
    epsilon: float
    times: tuple[float, ...]
    mass: tuple[float, ...]
    j_windows: tuple[tuple[int, int], ...]
    injected: tuple[float, ...] = ()

    @property
    def sup(self) -> float:
        return max(self.mass, default=0.0)

    @property
    def argmax(self) -> float | None:
        if not self.mass:
            return None
        return self.times[int(np.argmax(self.mass))]

    def header(self) -> tuple[str, ...]:
        return ("t", "mass", "j_min", "j_max")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        for t, m, (lo, hi) in zip(self.times, self.mass, self.j_windows, strict=True):
            yield (t, m, lo, hi)

    def to_dict(self) -> JsonDict:
        return {
            "epsilon": self.epsilon,
            "sup": self.sup,
            "argmax": self.argmax,
            "injected": list(self.injected),
            "profile": [list(row) for row in self.iter_rows()],
        }


@dataclass(frozen=True)
class EtaRow:
    epsilon: float
    eta: int | None
    product: float | None
    mass_bound: float | None = None


@dataclass(frozen=True)
class EtaTable:
    rows: tuple[EtaRow, ...]
    ratio: float
    partial: bool = False

    @property
    def trends_to_zero(self) -> bool:
        """Last product (smallest ε) below a quarter of the largest one."""
        products = [r.product for r in sorted(self.rows, key=lambda r: -r.epsilon)]
        known = [p for p in products if p is not None]
        if len(known) < 2:
            return False
        return known[-1] < 0.25 * max(known)

    def header(self) -> tuple[str, ...]:
        return ("epsilon", "eta", "eta_times_eps", "mass_bound")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        for r in self.rows:
            yield (
                r.epsilon,
                "" if r.eta is None else r.eta,
                "" if r.product is None else r.product,
                "" if r.mass_bound is None else r.mass_bound,
            )

    def to_dict(self) -> JsonDict:
        return {
            "ratio": self.ratio,
            "partial": self.partial,
            "trends_to_zero": self.trends_to_zero,
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "eta": r.eta,
                    "eta_times_eps": r.product,
                    "mass_bound": r.mass_bound,
                }
                for r in self.rows
            ],
        }


@dataclass(frozen=True)
class BirkhoffHistogram:
    q: int
    tau: float
    edges: tuple[float, ...]
    masses: tuple[float, ...]
    mass_inside: float
    samples: int

    @property
    def mass_outside(self) -> float:
        return 1.0 - self.mass_inside

    def header(self) -> tuple[str, ...]:
        return ("bin_left", "mass")

    def iter_rows(self) -> Iterator[tuple[Cell, ...]]:
        yield from zip(self.edges[:-1], self.masses, strict=True)

    def to_dict(self) -> JsonDict:
        return {
            "q": self.q,
            "tau": self.tau,
            "samples": self.samples,
            "mass_inside": self.mass_inside,
            "mass_outside": self.mass_outside,
            "bins": [list(row) for row in self.iter_rows()],
        }


# ──────────────────────────────────────────────────────────────
# roof_algebra
# ──────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class StabilityCertificate:
    stable: bool
    j: int
    theta_f: float
    eta_g: float | None = None
    theta_fg: float | None = None
    reverified: bool = False
    reason: str | None = None

    def to_dict(self) -> JsonDict:
        return {
            "stable": self.stable,
            "j": self.j,
            "theta_f": self.theta_f,
            "eta_g": self.eta_g,
            "theta_fg": self.theta_fg,
            "reverified": self.reverified,
            "reason": self.reason,
        }
