"""Simulation and checks for the Johnson-Mehl birth-growth model with random speeds."""

__version__ = "0.1.0"

from .geometry import Ball, Box
from .model import (
    FiniteDiscrete,
    InfiniteMoment,
    LogNormal,
    ModelSpec,
    PointMass,
    QuadratureSpec,
    Seed,
    TimeIntensity,
    TruncatedPareto,
    Uniform,
    ValidationFailed,
    validate,
)
