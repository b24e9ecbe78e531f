"""Pseudo-spectral phase-field vesicle flow on the periodic unit cube."""

from .dynamics import RunResult, State, StepperConfig, run, step
from .energy import ModelParams
from .spectral import DealiasRule, GridSpec, SpectralScalar, SpectralVector

__all__ = [
    "DealiasRule", "GridSpec", "ModelParams", "RunResult", "SpectralScalar",
    "SpectralVector", "State", "StepperConfig", "run", "step",
]
__version__ = "0.1.0"
