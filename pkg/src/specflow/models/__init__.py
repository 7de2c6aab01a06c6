"""Domain values and result records."""

from __future__ import annotations

from .domain import (
    CirclePoint,
    ContinuedFraction,
    Jump,
    JumpSpec,
    QuadraticIrrational,
    SpecialFlowPoint,
)
from .reports import (
    BirkhoffHistogram,
    DKSweep,
    DriftIdentity,
    DriftReport,
    EtaTable,
    HitCount,
    MixingReport,
    OscillatoryIntegral,
    PopulationSummary,
    RatnerParams,
    RigidityProfile,
    StabilityCertificate,
)


__all__ = [
    "BirkhoffHistogram",
    "CirclePoint",
    "ContinuedFraction",
    "DKSweep",
    "DriftIdentity",
    "DriftReport",
    "EtaTable",
    "HitCount",
    "Jump",
    "JumpSpec",
    "MixingReport",
    "OscillatoryIntegral",
    "PopulationSummary",
    "QuadraticIrrational",
    "RatnerParams",
    "RigidityProfile",
    "SpecialFlowPoint",
    "StabilityCertificate",
]
