"""Default experiment configuration: grid, model parameters, pulse protocol.

The FitzHugh-Nagumo defaults below were tuned so that a stable traveling
pulse exists on the default periodic domain, the Newton solve converges from
the relaxation protocol, the spectral gap is positive, and the first noise
pairing c_1^2 + c_-1^2 is comfortably nondegenerate.
"""

import numpy as np

from .etd import evolve_pde
from .grid import FieldState, Grid1D
from .models import fhn_model, fhn_multiplicative
from .pulse import find_pulse

DEFAULT_LENGTH = 20
DEFAULT_NPOINTS = 512
DEFAULT_FHN = {"nu": 0.05, "a": 0.1, "eps": 0.01, "gamma": 2.0}
DEFAULT_GUESS_SPEED = 0.1
DEFAULT_RELAX_DURATION = 600.0
DEFAULT_RELAX_DT = 0.02

# Two-pulse synchronization configuration.  gamma = 5 roughly doubles the
# shape-relaxation gap (smaller tube excursions) and the multiplicative
# noise shape g = (u, 0) confines forcing to the pulse, so the field stays
# near the pulse family while the k = +-1 modes still contract the phase.
CAPSTONE_FHN = {"nu": 0.05, "a": 0.1, "eps": 0.01, "gamma": 5.0}
CAPSTONE_ALPHA = {0: 0.15, 1: 0.8, 2: 0.05}
CAPSTONE_SPDE_DT = 0.02


def default_grid(length=DEFAULT_LENGTH, npoints=DEFAULT_NPOINTS):
    return Grid1D(length, npoints)


def default_model(**overrides):
    params = dict(DEFAULT_FHN)
    params.update(overrides)
    return fhn_model(**params)


def pulse_guess(grid, model, duration=DEFAULT_RELAX_DURATION, dt=DEFAULT_RELAX_DT):
    """Relax a seeded excitation into a rightward traveling pulse.

    A localized bump ignites the medium; a refractory patch of the recovery
    variable placed to its left blocks the leftward front, leaving a single
    rightward pulse that the PDE evolution shapes into the traveling profile.
    """
    x = grid.x
    mid = grid.length / 2.0
    u0 = np.exp(-((x - mid) ** 2) / 0.3)
    v0 = 0.15 * np.exp(-((x - mid + 2.5) ** 2) / 2.0)
    state = FieldState(grid, np.stack([u0, v0]))
    return evolve_pde(state, model, duration, dt)


def default_pulse(grid=None, model=None, with_spectrum=True):
    """Converged PulseSolution for the default configuration."""
    grid = grid or default_grid()
    model = model or default_model()
    guess = pulse_guess(grid, model)
    return find_pulse(
        model, guess, DEFAULT_GUESS_SPEED, with_spectrum=with_spectrum
    )


def capstone_model():
    """Multiplicative-noise model for the two-pulse synchronization runs."""
    return fhn_multiplicative(**CAPSTONE_FHN)


def capstone_pulse(grid=None, with_spectrum=True):
    """Pulse of the synchronization configuration (deterministic parts of
    the capstone model coincide with fhn_model at the same parameters)."""
    grid = grid or default_grid()
    det = fhn_model(**CAPSTONE_FHN)
    guess = pulse_guess(grid, det)
    return find_pulse(det, guess, DEFAULT_GUESS_SPEED, with_spectrum=with_spectrum)


def capstone_noise(sigma=0.1):
    from .noise import homogeneous_noise

    return homogeneous_noise(alpha_by_mode=dict(CAPSTONE_ALPHA), sigma=sigma)
