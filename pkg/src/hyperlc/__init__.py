"""Pseudo-spectral solver and verifier for small-data liquid-crystal flow near a constant director."""

from .multipliers import Coefficients, InadmissibleCoefficients
from .physics import ChartViolation
from .spectral import Grid3, SpectralField, VectorField3
from .timestepper import (
    InitialDataSpec,
    NumericalDivergence,
    SchemeConfig,
    SimulationState,
    generate_initial_data,
    run,
    step,
)

__all__ = [
    "ChartViolation",
    "Coefficients",
    "Grid3",
    "InadmissibleCoefficients",
    "InitialDataSpec",
    "NumericalDivergence",
    "SchemeConfig",
    "SimulationState",
    "SpectralField",
    "VectorField3",
    "generate_initial_data",
    "run",
    "step",
]

__version__ = "0.1.0"
