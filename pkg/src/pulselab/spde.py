"""Stochastic PDE simulation of the pulse under periodic multiplicative noise.

One step combines the deterministic ETD1 update with the Ito-Stratonovich
drift correction and the real-space noise increment:

    u_{n+1} = ETD1(u_n, f + 1/2 sigma^2 sum_k alpha_k^2 (g'g)(u_n) e_k^2)
              + sigma g(u_n) sum_k alpha_k e_k dbeta_k.

With sigma = 0 this is exactly the deterministic stepper.  Increments use
the same counter-based streams as the reduced SDE, so a reduced trajectory
driven by the same seed consumes identical numbers.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, LeftBasinError, OffManifoldError
from .etd import ETD1Stepper
from .grid import FieldState
from .noise import basis_function, mode_order
from .phase import phase_fit, wrap_centered
from .rng import gaussians
from .sde import CoeffTables
from .kernels import get_backend


def noise_mode_fields(noise, grid):
    """alpha_k e_k sampled on the grid, shape (2K+1, N), in mode order.

    On commensurate grids (N divisible by L) one period is evaluated and
    tiled, so integer-period shifts of the fields are exact rolls.
    """
    N, L = grid.npoints, grid.length
    if N % L == 0:
        P = N // L
        xper = np.arange(P) * grid.h
        rows = [noise[k] * np.tile(basis_function(k, xper), L)
                for k in mode_order(noise.K)]
    else:
        x = grid.x
        rows = [noise[k] * basis_function(k, x) for k in mode_order(noise.K)]
    return np.stack(rows)


class SpdeStepper:
    """ETD1 stepper with multiplicative periodic noise at fixed dt."""

    def __init__(self, grid, model, noise, sigma, dt):
        self.grid = grid
        self.model = model
        self.noise = noise
        self.sigma = float(sigma)
        self.dt = dt
        self.etd = ETD1Stepper(grid, model, dt)
        self.E = noise_mode_fields(noise, grid)          # (2K+1, N)
        self.ito_weight = 0.5 * self.sigma ** 2 * np.sum(self.E ** 2, axis=0)
        self.root_dt = math.sqrt(dt)

    def step(self, values, z):
        """One step; z holds the (2K+1,) standard normals for this step."""
        if self.sigma == 0.0:
            return self.etd.step(values)
        corr = self.ito_weight[None, :] * self.model.gdg(values)
        det = self.etd.step(values, extra_drift=corr)
        W = self.E.T @ (z * self.root_dt)                # (N,)
        return det + self.sigma * self.model.g(values) * W[None, :]


def spde_step(state, model, noise, sigma, increments, dt):
    """Single SPDE step (functional form); increments: (2K+1,) normals."""
    stepper = SpdeStepper(state.grid, model, noise, sigma, dt)
    values = stepper.step(state.values, np.asarray(increments, dtype=float))
    return FieldState(state.grid, values, t=state.t + dt)


@dataclass
class SpdeRun:
    """Checkpoint record of one SPDE pulse trajectory."""

    seed: int
    sigma: float
    dt: float
    horizon: float
    times: np.ndarray
    phase: np.ndarray           # unwrapped fitted pulse position
    tube: np.ndarray
    gamma: np.ndarray = None    # reduced-model phase on the same noise
    censored: bool = False
    censor_reason: str = ""


@dataclass
class TwoPulseReport:
    run_u: SpdeRun
    run_v: SpdeRun
    times: np.ndarray
    phase_distance: np.ndarray      # unit-torus distance of fitted phases
    discrepancy: np.ndarray         # min_n || u(.+n) - v ||_2
    censored: bool = False


class _PhaseTracker:
    """Continuous lift of the fitted pulse position along a run."""

    def __init__(self, pulse):
        self.pulse = pulse
        self.lift = None

    def update(self, values):
        fit = phase_fit(values, self.pulse)
        if self.lift is None:
            self.lift = fit.phase
        else:
            self.lift += wrap_centered(fit.phase - self.lift,
                                       self.pulse.grid.length)
        return self.lift, fit.tube_distance


def _field_discrepancy(grid, u, v):
    """min over integer shifts n of ||u(. + n) - v||_2."""
    best = np.inf
    N, L = grid.npoints, grid.length
    if N % L == 0:
        P = N // L
        for n in range(L):
            best = min(best, grid.norm(np.roll(u, -n * P, axis=-1) - v))
    else:
        for n in range(L):
            best = min(best, grid.norm(grid.shift_field(u, -n) - v))
    return best


def default_checkpoint_stride(sigma, dt):
    """Checkpoint every sigma^-2 / 100 time units, at least one step."""
    return max(1, int(round(1.0 / (100.0 * sigma ** 2 * dt))))


def two_pulse_experiment(
    x0,
    y0,
    model,
    noise,
    sigma,
    horizon,
    seed,
    pulse,
    dt=0.02,
    checkpoint_stride=None,
):
    """Shared-noise evolution of two pulse translates; synchronization report.

    Both solutions consume the identical increments per step.  Checkpoints
    record fitted phases (continuous lifts), tube distances, the unit-torus
    phase distance, and the integer-shift-minimized field discrepancy.
    """
    grid = pulse.grid
    nsteps = int(round(horizon / dt))
    if checkpoint_stride is None:
        checkpoint_stride = default_checkpoint_stride(sigma, dt)
    stepper = SpdeStepper(grid, model, noise, sigma, dt)
    u = pulse.translate(x0)
    v = pulse.translate(y0)
    tr_u, tr_v = _PhaseTracker(pulse), _PhaseTracker(pulse)
    times, ph_u, ph_v, tb_u, tb_v, disc = [], [], [], [], [], []
    censored = False
    reason = ""

    def checkpoint(t):
        lu, du = tr_u.update(u)
        lv, dv = tr_v.update(v)
        times.append(t)
        ph_u.append(lu)
        ph_v.append(lv)
        tb_u.append(du)
        tb_v.append(dv)
        disc.append(_field_discrepancy(grid, u, v))

    try:
        checkpoint(0.0)
        done = 0
        while done < nsteps:
            upto = min(done + checkpoint_stride, nsteps)
            z = gaussians(seed, range(stepper.E.shape[0]), done, upto - done)
            for s in range(upto - done):
                u = stepper.step(u, z[s])
                v = stepper.step(v, z[s])
            done = upto
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise BlowUpError(done, t=done * dt)
            checkpoint(done * dt)
    except (BlowUpError, LeftBasinError, OffManifoldError) as exc:
        censored = True
        reason = str(exc)

    times = np.asarray(times)
    ph_u = np.asarray(ph_u)
    ph_v = np.asarray(ph_v)
    frac = np.mod(ph_u - ph_v, 1.0)
    phase_distance = np.minimum(frac, 1.0 - frac)
    mk = lambda ph, tb: SpdeRun(
        seed=seed, sigma=sigma, dt=dt, horizon=horizon, times=times,
        phase=ph, tube=np.asarray(tb), censored=censored,
        censor_reason=reason,
    )
    return TwoPulseReport(
        run_u=mk(ph_u, tb_u),
        run_v=mk(ph_v, tb_v),
        times=times,
        phase_distance=phase_distance,
        discrepancy=np.asarray(disc),
        censored=censored,
    )


@dataclass
class ComparisonRecord:
    """SPDE vs reduced-SDE phase comparison on one shared noise path."""

    times: np.ndarray
    phase: np.ndarray          # fitted SPDE pulse position (lift)
    gamma: np.ndarray          # reduced-model phase (lift)
    tube: np.ndarray
    max_phase_error: float
    first_tube_exit: float     # first time tube distance exceeds tube_mult*sigma
    tube_mult: float
    censored: bool = False


def reduced_vs_full(
    x0,
    model,
    noise,
    sigma,
    horizon,
    seed,
    pulse,
    reduced,
    dt=0.02,
    checkpoint_stride=None,
    tube_mult=5.0,
    backend=None,
):
    """Run the SPDE and the reduced phase SDE on the identical increments."""
    grid = pulse.grid
    nsteps = int(round(horizon / dt))
    if checkpoint_stride is None:
        checkpoint_stride = default_checkpoint_stride(sigma, dt)
    stepper = SpdeStepper(grid, model, noise, sigma, dt)
    kern = get_backend(backend)
    tables = CoeffTables(reduced)
    u = pulse.translate(x0)
    tracker = _PhaseTracker(pulse)
    gamma = np.array([float(x0) - math.floor(x0)])
    wind = np.array([math.floor(x0)], dtype=np.int64)
    root_dt = math.sqrt(dt)
    times, phases, gammas, tubes = [], [], [], []
    censored = False
    lift0, tube0 = tracker.update(u)
    times.append(0.0)
    phases.append(lift0)
    gammas.append(wind[0] + gamma[0])
    tubes.append(tube0)
    try:
        done = 0
        while done < nsteps:
            upto = min(done + checkpoint_stride, nsteps)
            z = gaussians(seed, range(stepper.E.shape[0]), done, upto - done)
            for s in range(upto - done):
                u = stepper.step(u, z[s])
            kern.em_chunk(gamma, wind, z * root_dt, dt, tables.c, sigma,
                          *tables.em_args())
            done = upto
            if not np.all(np.isfinite(u)):
                raise BlowUpError(done, t=done * dt)
            lift, tube = tracker.update(u)
            times.append(done * dt)
            phases.append(lift)
            gammas.append(wind[0] + gamma[0])
            tubes.append(tube)
    except (BlowUpError, LeftBasinError, OffManifoldError):
        censored = True
    times = np.asarray(times)
    phases = np.asarray(phases)
    gammas = np.asarray(gammas)
    tubes = np.asarray(tubes)
    err = np.abs((phases - phases[0]) - (gammas - gammas[0]))
    exceed = np.nonzero(tubes > tube_mult * sigma)[0]
    first_exit = float(times[exceed[0]]) if exceed.size else math.inf
    return ComparisonRecord(
        times=times,
        phase=phases,
        gamma=gammas,
        tube=tubes,
        max_phase_error=float(np.max(err)),
        first_tube_exit=first_exit,
        tube_mult=tube_mult,
        censored=censored,
    )
