"""Phase extraction: cross-correlation fit, isochron map, second variation."""

from dataclasses import dataclass

import numpy as np

from .errors import LeftBasinError, OffManifoldError
from .etd import ETD1Stepper, ETD2Stepper
from .grid import FieldState

DEFAULT_TUBE_FACTOR = 0.1     # delta_tube = 0.1 * ||u*||_2
DEFAULT_EPS_SECOND = 1e-3


def wrap_centered(x, period):
    """Representative of x in (-period/2, period/2]."""
    return x - period * np.round(x / period)


def tube_radius(pulse):
    return DEFAULT_TUBE_FACTOR * pulse.norm()


class _Correlator:
    """Cross-correlation of a field against all translates of the pulse."""

    def __init__(self, pulse):
        self.grid = pulse.grid
        self.uhat = np.fft.rfft(pulse.profile, axis=-1)
        self.q = self.grid.wavenumbers
        # curvature of the pulse autocorrelation at zero shift, for the
        # flatness guard
        auto = np.sum(self.uhat * np.conj(self.uhat), axis=0)
        self.ref_curvature = float(
            np.sum(-self.q ** 2 * _rfft_weights(self.grid.npoints) * auto.real)
        ) * self.grid.h / self.grid.npoints

    def corr_hat(self, w):
        what = np.fft.rfft(w, axis=-1)
        return np.sum(what * np.conj(self.uhat), axis=0)

    def corr_grid(self, chat):
        # C[m] = <w, T_{x_m} u*> (up to the h factor applied here)
        return np.fft.irfft(chat, n=self.grid.npoints) * self.grid.h

    def corr_at(self, chat, x, order=0):
        weights = _rfft_weights(self.grid.npoints)
        fac = (1j * self.q) ** order
        val = np.sum((weights * fac * chat * np.exp(1j * self.q * x)).real)
        return float(val) * self.grid.h / self.grid.npoints


def _rfft_weights(n):
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


@dataclass
class PhaseFit:
    phase: float          # in [0, L)
    tube_distance: float
    curvature: float


def phase_fit(w, pulse, curvature_factor=0.05, max_newton=20):
    """Fit the pulse position by maximizing <w, T_x u*> over translates.

    The grid argmax of the FFT cross-correlation is refined to sub-grid
    accuracy by Newton on the correlation derivative, with a parabolic
    fallback.  Raises OffManifoldError when the correlation peak is flatter
    than curvature_factor times the pulse autocorrelation curvature.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    grid = pulse.grid
    corr = _Correlator(pulse)
    chat = corr.corr_hat(w)
    cgrid = corr.corr_grid(chat)
    m = int(np.argmax(cgrid))
    x = m * grid.h

    threshold = curvature_factor * abs(corr.ref_curvature)
    converged = False
    xi = x
    for _ in range(max_newton):
        c1 = corr.corr_at(chat, xi, order=1)
        c2 = corr.corr_at(chat, xi, order=2)
        if c2 >= -1e-300:
            break
        step = -c1 / c2
        xi = xi + step
        if abs(step) < 1e-13 * grid.length:
            converged = True
            break
    if converged and abs(xi - x) <= grid.h:
        x = xi
    else:
        # parabolic interpolation through the three grid points at the peak
        cm = cgrid[(m - 1) % grid.npoints]
        c0 = cgrid[m]
        cp = cgrid[(m + 1) % grid.npoints]
        denom = cm - 2.0 * c0 + cp
        if denom < 0.0:
            x = x + 0.5 * grid.h * (cm - cp) / denom

    curv = corr.corr_at(chat, x, order=2)
    if not (curv < -threshold):
        raise OffManifoldError(
            f"correlation curvature {curv:.3e} above threshold {-threshold:.3e}"
        )
    x = x % grid.length
    shifted = grid.shift_field(pulse.profile, x)
    tube = grid.norm(w - shifted)
    return PhaseFit(phase=x, tube_distance=tube, curvature=curv)


def isochron_map(
    v,
    pulse,
    model,
    t_relax,
    dt=0.02,
    delta_tube=None,
    checkpoints=8,
    near=None,
    order=2,
):
    """Asymptotic phase of a state near the pulse family.

    Relaxes v deterministically for t_relax, fits the phase of the result,
    and subtracts the drift c*t_relax, unwrapping continuously from the
    initial fit.  Convergence is exponential at the linear spectral-gap rate.

    The returned value is a lift: by default the initial fit is taken in
    [0, L); passing `near` selects the representative of the initial phase
    closest to it, so that phases of nearby states are directly comparable
    without mod-L ambiguity.
    """
    grid = pulse.grid
    if isinstance(v, FieldState):
        values = v.values
    else:
        values = np.atleast_2d(np.asarray(v, dtype=float))
    if delta_tube is None:
        delta_tube = tube_radius(pulse)

    fit0 = _fit_in_tube(values, pulse, delta_tube, where="initial state")
    if near is not None:
        fit0.phase = near + wrap_centered(fit0.phase - near, grid.length)
    cls = ETD2Stepper if order == 2 else ETD1Stepper
    stepper = cls(grid, model, dt)
    seg_steps = max(1, int(round(t_relax / dt / checkpoints)))
    total_steps = int(round(t_relax / dt))
    done = 0
    lift = fit0.phase
    t_done = 0.0
    while done < total_steps:
        nseg = min(seg_steps, total_steps - done)
        for _ in range(nseg):
            values = stepper.step(values)
        done += nseg
        t_done = done * dt
        fit = _fit_in_tube(values, pulse, delta_tube, where=f"t = {t_done:g}")
        expected = lift + pulse.speed * (t_done - (done - nseg) * dt)
        lift = expected + wrap_centered(fit.phase - expected, grid.length)
    return lift - pulse.speed * t_done


def _fit_in_tube(values, pulse, delta_tube, where):
    try:
        fit = phase_fit(values, pulse)
    except OffManifoldError as exc:
        raise LeftBasinError(f"off manifold at {where}: {exc}") from exc
    if fit.tube_distance > delta_tube:
        raise LeftBasinError(
            f"tube distance {fit.tube_distance:.3e} exceeds "
            f"{delta_tube:.3e} at {where}"
        )
    return fit


def second_variation(
    pulse,
    model,
    v,
    w,
    eps=DEFAULT_EPS_SECOND,
    t_relax=None,
    dt=0.02,
    pi_base=None,
    **iso_kwargs,
):
    """pi''(u*)[v, w] by polarization of second central differences.

    v and w must have unit discrete L2 norm.  pi(u*) = 0 by convention;
    numerically the phase of u* itself carries a small time-discretization
    bias, so the baseline pi(u*) is evaluated with the same relaxation
    settings (or taken from pi_base) and subtracted, making the second
    difference exact to FD order.
    """
    grid = pulse.grid
    for name, d in (("v", v), ("w", w)):
        if abs(grid.norm(d) - 1.0) > 1e-8:
            raise ValueError(f"direction {name} must have unit discrete L2 norm")
    if t_relax is None:
        t_relax = default_relax_time(pulse)

    def pi_at(direction):
        state = pulse.profile + direction
        return isochron_map(
            state, pulse, model, t_relax, dt=dt, near=0.0, **iso_kwargs
        )

    if pi_base is None:
        pi_base = pi_at(np.zeros_like(pulse.profile))

    def second_diff(direction):
        nrm = grid.norm(direction)
        if nrm < 1e-14:
            return 0.0
        unit = direction / nrm
        plus = pi_at(eps * unit)
        minus = pi_at(-eps * unit)
        return (plus + minus - 2.0 * pi_base) / eps ** 2 * nrm ** 2

    return 0.25 * (second_diff(v + w) - second_diff(v - w))


def default_relax_time(pulse, decades=4.0):
    """Relaxation horizon giving e^{-a_gap t} ~ 10^-decades."""
    gap = pulse.a_gap
    if not np.isfinite(gap) or gap <= 0:
        raise ValueError("pulse has no positive spectral gap estimate")
    return decades * np.log(10.0) / gap
