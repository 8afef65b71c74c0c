"""Band gaps, dislocation branches and rotation-induced gap spectrum of periodic Schroedinger operators."""

__version__ = "0.1.0"

from .potentials import (  # noqa: E402
    DislocationPotential,
    InterfacePotential,
    MuffinTinPotential,
    RotatedPotential,
    StepPotential,
    TrigPotential1D,
    TrigPotential2D,
    default_potential_2d,
    default_step_potential,
)

__all__ = [
    "__version__",
    "DislocationPotential",
    "InterfacePotential",
    "MuffinTinPotential",
    "RotatedPotential",
    "StepPotential",
    "TrigPotential1D",
    "TrigPotential2D",
    "default_potential_2d",
    "default_step_potential",
]
