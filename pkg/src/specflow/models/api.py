"""Pydantic models for the scenario and report boundary.

Only the CLI layer touches these; the core modules take the frozen domain
types built from them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from specflow.types import ExperimentKind, OutputFormat  # noqa: TCH001


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ──────────────────────────────────────────────────────────────
# Roof specification
# ──────────────────────────────────────────────────────────────
class JumpModel(_Strict):
    beta: str = Field(description='Jump position as "p/q" or a decimal string')
    d: float

    @field_validator("beta")
    @classmethod
    def _beta_literal(cls, value: str) -> str:
        try:
            Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"unparseable position {value!r}") from exc
        return value.strip()


class ACModel(_Strict):
    breakpoints: list[float] = Field(min_length=1)
    coefficients: list[list[float]] = Field(min_length=1)

    @model_validator(mode="after")
    def _one_piece_per_breakpoint(self) -> ACModel:
        if len(self.breakpoints) != len(self.coefficients):
            raise ValueError("one coefficient list per breakpoint")
        return self


class NamedACModel(_Strict):
    kind: str = Field(pattern="^(tent|cubic_bump)$")
    amplitude: float


class NoncohomologousModel(_Strict):
    """Positive jumps base·ratio^(i−1) at 1/p_i with a geometric tail bound."""

    base_jump: float = Field(gt=0)
    ratio: float = Field(gt=0, lt=1)
    max_jumps: int = Field(default=12, ge=1, le=200)
    constant: float = 1.0


class RoofSpec(_Strict):
    constant: float = 0.0
    jumps: list[JumpModel] = Field(default_factory=list)
    ac: ACModel | None = None
    named_ac: NamedACModel | None = None
    tail_bound: float = Field(default=0.0, ge=0.0)
    noncohomologous: NoncohomologousModel | None = None

    @model_validator(mode="after")
    def _single_source(self) -> RoofSpec:
        if self.ac is not None and self.named_ac is not None:
            raise ValueError("give either ac or named_ac, not both")
        if self.noncohomologous is not None and self.jumps:
            raise ValueError("noncohomologous roofs generate their own jumps")
        return self


# ──────────────────────────────────────────────────────────────
# Scenario
# ──────────────────────────────────────────────────────────────
class OutputSpec(_Strict):
    directory: str = "out"
    format: OutputFormat = "both"
    stem: str | None = Field(default=None, pattern=r"^[A-Za-z0-9_.-]+$")


class Scenario(_Strict):
    """One experiment on one (α, f) pair."""

    alpha: str = Field(description='Quadratic irrational, e.g. "(-1+sqrt(5))/2"')
    roof: RoofSpec
    experiment: ExperimentKind
    params: dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0)
    depth: int | None = Field(default=None, ge=1)
    output: OutputSpec = Field(default_factory=OutputSpec)


# ──────────────────────────────────────────────────────────────
# Experiment parameters
# ──────────────────────────────────────────────────────────────
class CFParams(_Strict):
    depth: int = Field(default=20, ge=1)


class GapsParams(_Strict):
    k_max: int = Field(default=500, ge=2)


class BirkhoffParams(_Strict):
    x: str = "0"
    n: int = Field(default=100, ge=1)
    times: list[float] = Field(default_factory=list)


class DKParams(_Strict):
    points: int = Field(default=16, ge=1)
    n_max: int = Field(default=12, ge=0)


class RatnerParamsModel(_Strict):
    epsilon: float = Field(default=0.1, gt=0, lt=1)
    N: int = Field(default=10, ge=1)
    trials: int = Field(default=200, ge=0)
    jobs: int = Field(default=1, ge=1)


class MixingParams(_Strict):
    g_vn: RoofSpec | None = None
    r_list: list[float] = Field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0])
    q_indices: list[int] = Field(default_factory=lambda: [5, 6, 7, 8, 9, 10])
    margin: float = Field(default=0.05, gt=0)
    tolerance: float = Field(default=1e-8, gt=0)


class RigidityParams(_Strict):
    epsilon: float = Field(default=0.05, gt=0)
    t_min: float = 10.0
    t_max: float = 60.0
    steps: int = Field(default=500, ge=1)
    grid_n: int = Field(default=2000, ge=1)
    eps_grid: list[float] = Field(default_factory=list)
    C1: float | None = Field(default=None, gt=0)
    C2: float | None = Field(default=None, gt=0)


class DistributionParams(_Strict):
    n_indices: list[int] = Field(default_factory=lambda: [6, 7, 8, 9, 10])
    samples: int = Field(default=20000, ge=1)
    tau: float = Field(default=0.05, gt=0)
    subtract_von_neumann: int | None = Field(default=None, ge=1)
    ac_only: bool = False
    recentre: bool = True


class StabilityParams(_Strict):
    g: RoofSpec


# ──────────────────────────────────────────────────────────────
# Report
# ──────────────────────────────────────────────────────────────
class PrecisionDiagnostics(_Strict):
    bits: int
    max_error_bound: float


class RunReport(_Strict):
    """Written next to the CSV output; wall time stays in memory only."""

    version: str
    scenario: dict[str, Any]
    experiment: ExperimentKind
    payload: dict[str, Any]
    falsifications: int = 0
    rng: str | None = None
    precision: PrecisionDiagnostics
    wall_time: float = Field(default=0.0, exclude=True)
