"""Simulation laboratory for stochastic traveling pulses.

Deterministic pulse computation, numerical isochron maps, explicit
phase-reduced SDEs on the torus, Lyapunov exponents, stationary densities,
and stochastic PDE synchronization experiments.
"""

__version__ = "0.1.0"

from .grid import FieldState, Grid1D
from .models import ModelSpec, fhn_model, fhn_multiplicative
from .pulse import PulseSolution, find_pulse

__all__ = [
    "FieldState",
    "Grid1D",
    "ModelSpec",
    "PulseSolution",
    "fhn_model",
    "fhn_multiplicative",
    "find_pulse",
]
