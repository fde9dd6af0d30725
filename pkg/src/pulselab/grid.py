"""Periodic 1D grid and discrete field containers.

The computational domain is a periodic interval of integer length L holding
L copies of the unit noise period.  Discrete L2 inner products carry the
grid weight h, so norms approximate integrals over the domain.
"""

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [0, L) with N points, h = L/N."""

    length: int
    npoints: int

    def __post_init__(self):
        if int(self.length) != self.length or self.length < 1:
            raise ValueError("domain length must be a positive integer")
        if self.npoints < 4 or not _is_power_of_two(self.npoints):
            raise ValueError("point count must be a power of two, at least 4")

    @property
    def h(self):
        return self.length / self.npoints

    @property
    def x(self):
        return np.arange(self.npoints) * self.h

    @property
    def wavenumbers(self):
        """Angular wavenumbers for the rfft layout."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.npoints, d=self.h)

    def inner(self, a, b):
        """Discrete L2 pairing h * sum(a*b), summed over components."""
        return self.h * float(np.sum(a * b))

    def norm(self, a):
        return np.sqrt(self.h * float(np.sum(a * a)))

    def shift_field(self, f, x):
        """Translate a (ncomp, N) field by x (T_x f = f(. - x)) via Fourier."""
        f = np.atleast_2d(f)
        phase = np.exp(-1j * self.wavenumbers * x)
        return np.fft.irfft(np.fft.rfft(f, axis=-1) * phase, n=self.npoints, axis=-1)

    def roll_points(self, f, npts):
        """Translate by an integer number of grid points (exact)."""
        return np.roll(f, npts, axis=-1)

    def deriv(self, f, order=1):
        """Spectral derivative of a (..., N) field."""
        q = self.wavenumbers
        fac = (1j * q) ** order
        if order % 2 == 1:
            # zero the Nyquist mode for odd derivatives
            fac = fac.copy()
            fac[-1] = 0.0
        return np.fft.irfft(np.fft.rfft(f, axis=-1) * fac, n=self.npoints, axis=-1)

    def diff_matrix(self, order=1):
        """Dense spectral differentiation matrix (N x N)."""
        eye = np.eye(self.npoints)
        return self.deriv(eye, order=order).T


@dataclass
class FieldState:
    """An n-component real field sampled on a Grid1D, with a time stamp."""

    grid: Grid1D
    values: np.ndarray  # shape (ncomp, N)
    t: float = 0.0

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[-1] != self.grid.npoints:
            raise ValueError("field sample count does not match the grid")

    @property
    def ncomp(self):
        return self.values.shape[0]

    def copy(self, t=None):
        return FieldState(self.grid, self.values.copy(), self.t if t is None else t)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def norm(self):
        return self.grid.norm(self.values)
