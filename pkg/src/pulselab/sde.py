"""Phase-reduced SDE on the unit torus: simulation, Lyapunov exponents,
synchronization times, noise rescaling, and the controlled squeeze demo.

All stochastic stepping is Euler-Maruyama in Ito form,

    x <- x + (c + sigma^2 a(x)) dt + sigma sum_k b_k(x) dbeta_k,

with every ensemble member consuming the identical increments per step
(shared noise).  Increments come from counter-based streams (rng.gaussians),
so restarting at any step reproduces the continuation bit-for-bit.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .kernels import get_backend
from .rng import gaussians

DEFAULT_CHUNK = 1 << 19


def torus_distance(x, y):
    """Distance on the unit torus."""
    frac = np.mod(x - y, 1.0)
    return np.minimum(frac, 1.0 - frac)


def default_dt(reduced, sigma, cap=1e-3, scale=1e-2):
    """Step-size rule tied to coefficient magnitudes, capped for acceptance."""
    max_a = reduced.a.max_abs()
    max_b = max(s.max_abs() for s in reduced.b.values())
    dt = scale / (1.0 + sigma ** 2 * max_a + sigma * max_b * reduced.K)
    return min(dt, cap)


@dataclass(frozen=True)
class NoisePath:
    """Counter-based increment streams for modes |k| <= K.

    The raw stream value for (mode j, step s) is a standard normal keyed by
    (seed, j, offset + s); increments are scaled to variance base_dt, then
    multiplied by amp, and mode pairs (k, -k) are rotated by the angle
    -2 pi k rot_speed (offset + s) base_dt.  dt is the step size consumed by
    the integrator (it differs from base_dt after a time rescaling).
    """

    seed: int
    dt: float
    horizon: float
    K: int
    offset: int = 0
    amp: float = 1.0
    rot_speed: float = 0.0
    base_dt: float = None

    def __post_init__(self):
        if self.base_dt is None:
            object.__setattr__(self, "base_dt", self.dt)
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dt and horizon must be positive")

    @property
    def nmodes(self):
        return 2 * self.K + 1

    @property
    def nsteps(self):
        return int(round(self.horizon / self.dt))

    def shifted(self, steps):
        """Path with the step origin advanced (the shift map on noise)."""
        return replace(self, offset=self.offset + steps)

    def increments(self, lo, hi):
        """Increment rows for steps lo..hi-1, shape (hi-lo, 2K+1)."""
        z = gaussians(self.seed, range(self.nmodes), self.offset + lo, hi - lo)
        z *= self.amp * math.sqrt(self.base_dt)
        if self.rot_speed != 0.0:
            s_abs = self.offset + lo + np.arange(hi - lo)
            for k in range(1, self.K + 1):
                jp = 2 * k - 1  # storage index of mode +k
                jm = 2 * k      # storage index of mode -k
                phi = -2.0 * np.pi * k * self.rot_speed * s_abs * self.base_dt
                cp, sp = np.cos(phi), np.sin(phi)
                zp = cp * z[:, jp] - sp * z[:, jm]
                zm = sp * z[:, jp] + cp * z[:, jm]
                z[:, jp] = zp
                z[:, jm] = zm
        return z


def rescale_noise(path, c, sigma):
    """Measure-preserving path transform behind the sigma time change.

    Mode pairs are rotated by R(-2 pi k c s dt) at base step s, then time is
    rescaled by sigma^2 with amplitudes scaled by sigma — implemented as a
    reinterpretation of the step size and amplitude, never by resampling.
    """
    return replace(
        path,
        dt=path.dt * sigma ** 2,
        horizon=path.horizon * sigma ** 2,
        amp=path.amp * sigma,
        rot_speed=path.rot_speed + c,
    )


@dataclass
class TorusEnsemble:
    """Phase points on the unit torus with optional tangent values."""

    positions: np.ndarray
    tangent: np.ndarray = None
    t: float = 0.0

    def __post_init__(self):
        self.positions = np.atleast_1d(np.asarray(self.positions, dtype=float))
        self.positions = np.mod(self.positions, 1.0)
        if self.tangent is not None:
            self.tangent = np.atleast_1d(np.asarray(self.tangent, dtype=float))

    @property
    def size(self):
        return self.positions.size

    def distances(self):
        """Pairwise torus distance matrix."""
        return torus_distance(self.positions[:, None], self.positions[None, :])


class CoeffTables:
    """Flat coefficient arrays consumed by the stepping kernels."""

    def __init__(self, reduced):
        self.c = float(reduced.speed)
        a = reduced.a
        self.amean = float(a.mean)
        self.acos = np.ascontiguousarray(a.cos)
        self.asin = np.ascontiguousarray(a.sin)
        da = reduced.da
        ma = a.order
        self.dacos = np.zeros(ma)
        self.dasin = np.zeros(ma)
        self.dacos[: da.order] = da.cos
        self.dasin[: da.order] = da.sin
        modes = reduced.modes()
        self.harm = np.array([abs(k) for k in modes], dtype=np.int64)
        self.bmean = np.zeros(len(modes))
        self.bcos = np.zeros(len(modes))
        self.bsin = np.zeros(len(modes))
        for j, k in enumerate(modes):
            series = reduced.b[k]
            self.bmean[j] = series.mean
            h = abs(k)
            if h >= 1 and series.order >= h:
                self.bcos[j] = series.cos[h - 1]
                self.bsin[j] = series.sin[h - 1]

    def em_args(self):
        return (self.amean, self.acos, self.asin, self.harm, self.bmean,
                self.bcos, self.bsin)

    def tangent_args(self):
        return (self.amean, self.acos, self.asin, self.dacos, self.dasin,
                self.harm, self.bmean, self.bcos, self.bsin)


@dataclass
class TrajectoryRecord:
    """Recorded lifts (and tangent log-derivatives) at a fixed step stride."""

    times: np.ndarray
    lifts: np.ndarray          # (nrec, m) unwrapped
    ell: np.ndarray = None     # (nrec, m) tangent log-derivative, if tracked
    final: TorusEnsemble = None

    @property
    def positions(self):
        return np.mod(self.lifts, 1.0)


def simulate(
    reduced,
    sigma,
    ensemble,
    path,
    duration,
    record_stride=None,
    tangent=False,
    backend=None,
    chunk=DEFAULT_CHUNK,
):
    """Shared-noise Euler-Maruyama run; returns a TrajectoryRecord.

    record_stride is in steps (default: record endpoints only).  Positions
    are integrated and recorded as lifts; the final ensemble is wrapped.
    """
    kern = get_backend(backend)
    dt = path.dt
    nsteps = int(round(duration / dt))
    if nsteps * dt > path.horizon * (1 + 1e-12):
        raise ValueError("duration exceeds the path horizon")
    if record_stride is None:
        record_stride = max(nsteps, 1)
    tables = CoeffTables(reduced)
    x = ensemble.positions.astype(float).copy()
    wind = np.zeros(x.size, dtype=np.int64)
    if tangent:
        ell = (
            np.zeros_like(x)
            if ensemble.tangent is None
            else np.log(np.abs(ensemble.tangent)).astype(float)
        )
    nrec = nsteps // record_stride + 1
    times = np.empty(nrec)
    lifts = np.empty((nrec, x.size))
    ells = np.empty((nrec, x.size)) if tangent else None
    times[0] = ensemble.t
    lifts[0] = x
    if tangent:
        ells[0] = ell
    done = 0
    irec = 1
    while done < nsteps:
        upto = min(done + chunk, nsteps)
        # stop at the next recording boundary inside this chunk
        next_rec = ((done // record_stride) + 1) * record_stride
        upto = min(upto, next_rec)
        z = path.increments(done, upto)
        if tangent:
            kern.em_tangent_chunk(x, ell, wind, z, dt, tables.c, sigma,
                                  *tables.tangent_args())
        else:
            kern.em_chunk(x, wind, z, dt, tables.c, sigma, *tables.em_args())
        done = upto
        if done % record_stride == 0 and irec < nrec:
            times[irec] = ensemble.t + done * dt
            lifts[irec] = wind + x
            if tangent:
                ells[irec] = ell
            irec += 1
    final = TorusEnsemble(
        x,
        tangent=np.exp(ell) if tangent else None,
        t=ensemble.t + nsteps * dt,
    )
    return TrajectoryRecord(times=times[:irec], lifts=lifts[:irec],
                            ell=ells[:irec] if tangent else None, final=final)


def tangent_lyapunov_mc(
    reduced,
    sigma,
    x0,
    path,
    duration,
    burn_in,
    nbatches=20,
    backend=None,
):
    """Monte Carlo Lyapunov exponent from the tangent log-derivative.

    Returns (lambda_hat, stderr): the post-burn-in slope of ell and a
    batch-means standard error over nbatches equal batches.
    """
    if burn_in >= duration:
        raise ValueError("duration must exceed burn_in")
    dt = path.dt
    nsteps = int(round(duration / dt))
    burn_steps = int(round(burn_in / dt))
    span = nsteps - burn_steps
    batch = max(span // nbatches, 1)
    rec = simulate(
        reduced, sigma, TorusEnsemble(np.atleast_1d(x0)), path,
        nsteps * dt, record_stride=batch, tangent=True, backend=backend,
    )
    times = rec.times
    ell = rec.ell[:, 0]
    mask = times >= burn_in * (1 - 1e-12)
    tb, eb = times[mask], ell[mask]
    lam = (eb[-1] - eb[0]) / (tb[-1] - tb[0])
    slopes = np.diff(eb) / np.diff(tb)
    stderr = slopes.std(ddof=1) / math.sqrt(slopes.size) if slopes.size > 1 else np.inf
    return lam, stderr


@dataclass
class SyncResult:
    time: float
    censored: bool


def sync_time(
    reduced,
    sigma,
    x0,
    y0,
    threshold,
    path,
    duration=None,
    backend=None,
    chunk=DEFAULT_CHUNK,
):
    """First time the torus distance of a shared-noise pair drops below
    threshold; censored at the horizon."""
    kern = get_backend(backend)
    dt = path.dt
    if duration is None:
        duration = path.horizon
    nsteps = int(round(duration / dt))
    tables = CoeffTables(reduced)
    xy = np.mod(np.array([x0, y0], dtype=float), 1.0)
    if float(torus_distance(x0, y0)) < threshold:
        return SyncResult(0.0, False)
    done = 0
    while done < nsteps:
        upto = min(done + chunk, nsteps)
        z = path.increments(done, upto)
        hit = kern.em_two_chunk(xy, z, dt, tables.c, sigma, *tables.em_args(),
                                threshold)
        if hit >= 0:
            return SyncResult((done + hit + 1) * dt, False)
        done = upto
    return SyncResult(nsteps * dt, True)


@dataclass
class SyncScanRow:
    sigma: float
    times: np.ndarray
    median: float
    censored: int
    unreliable: bool


@dataclass
class SyncScanResult:
    rows: list
    slope: float
    intercept: float

    def table(self):
        return [
            (r.sigma, r.median, r.censored, r.unreliable) for r in self.rows
        ]


def sync_scaling_scan(
    reduced,
    sigma_list,
    reps,
    threshold,
    base_seed=0,
    x0=0.0,
    y0=1.0 / 3.0,
    horizon_factor=200.0,
    dt_cap=1e-3,
    backend=None,
):
    """Median sync time per sigma and the log-log slope vs sigma.

    Each (sigma, rep) pair gets an independent seed; the horizon is
    horizon_factor / sigma^2.  Rows with more than 20% censored runs carry
    an unreliable flag and are excluded from the fit.
    """
    rows = []
    for isig, sigma in enumerate(sigma_list):
        dt = default_dt(reduced, sigma, cap=dt_cap)
        horizon = horizon_factor / sigma ** 2
        times = np.empty(reps)
        censored = 0
        for rep in range(reps):
            path = NoisePath(
                seed=base_seed + 100003 * isig + rep,
                dt=dt,
                horizon=horizon,
                K=reduced.K,
            )
            res = sync_time(reduced, sigma, x0, y0, threshold, path,
                            backend=backend)
            times[rep] = res.time
            censored += res.censored
        rows.append(
            SyncScanRow(
                sigma=sigma,
                times=times,
                median=float(np.median(times)),
                censored=censored,
                unreliable=censored > 0.2 * reps,
            )
        )
    good = [r for r in rows if not r.unreliable]
    if len(good) < 2:
        return SyncScanResult(rows=rows, slope=float("nan"),
                              intercept=float("nan"))
    logs = np.log([r.sigma for r in good])
    logt = np.log([r.median for r in good])
    slope, intercept = np.polyfit(logs, logt, 1)
    return SyncScanResult(rows=rows, slope=float(slope),
                          intercept=float(intercept))


def stationary_samples(
    reduced,
    sigma,
    dt,
    nwalkers,
    nsteps,
    seed=0,
    scheme="ito",
    burn_steps=None,
    sample_stride=None,
):
    """Independent-noise ensemble samples of the (approximate) stationary law.

    Unlike simulate (shared noise), every walker consumes its own increment
    streams.  After burn_steps (default nsteps // 2) the walker positions are
    collected every sample_stride steps (default: endpoint only), so the
    return value holds nwalkers * ncheckpoints positions — i.i.d. across
    walkers, decorrelated in time if the stride exceeds the mixing time.
    scheme selects the discretization of the same underlying SDE: "ito" is
    Euler-Maruyama on the Ito form, "stratonovich" is Euler-Heun
    (predictor-corrector on the diffusion term) on the equivalent
    Stratonovich form; both converge to the same stationary law as dt -> 0.
    """
    from .reduction import strat_drift

    if scheme not in ("ito", "stratonovich"):
        raise ValueError(f"unknown scheme {scheme!r}")
    modes = reduced.modes()
    nm = len(modes)
    drift_a = reduced.a if scheme == "ito" else strat_drift(reduced)
    c = reduced.speed
    root_dt = math.sqrt(dt)
    sig2 = sigma * sigma
    if burn_steps is None:
        burn_steps = nsteps // 2
    x = np.mod((np.arange(nwalkers) + 0.5) / nwalkers, 1.0)

    def bmat(pos):
        return np.stack([reduced.b[k](pos) for k in modes], axis=-1)

    # keep each increment block under ~8M doubles
    chunk = max(1, 8_000_000 // max(1, nm * nwalkers))
    samples = []
    done = 0
    while done < nsteps:
        upto = min(done + chunk, nsteps)
        z = gaussians(seed, range(nm * nwalkers), done, upto - done)
        z = z.reshape(upto - done, nwalkers, nm) * root_dt
        for s in range(upto - done):
            drift = (c + sig2 * drift_a(x)) * dt
            bx = bmat(x)
            noise = sigma * np.einsum("wm,wm->w", bx, z[s])
            if scheme == "ito":
                y = x + drift + noise
            else:
                pred = np.mod(x + drift + noise, 1.0)
                noise = 0.5 * sigma * np.einsum(
                    "wm,wm->w", bx + bmat(pred), z[s])
                y = x + drift + noise
            x = np.mod(y, 1.0)
            step = done + s + 1
            if (sample_stride is not None and step > burn_steps
                    and (step - burn_steps) % sample_stride == 0):
                samples.append(x.copy())
        done = upto
    if sample_stride is None:
        return x
    if not samples:
        raise ValueError("no samples collected: stride exceeds the run")
    return np.concatenate(samples)


# -- controlled squeeze demo ---------------------------------------------


@dataclass
class SqueezeRecord:
    times: np.ndarray
    trajectories: np.ndarray  # (n_times, m) lifts
    initial: np.ndarray
    targets: tuple
    gain: float
    inequalities: dict
    reversal_error: float


def controlled_squeeze(
    reduced,
    sigma,
    gain,
    targets=(0.0, 1.0 / 3.0, -1.0 / 3.0),
    extra_points=16,
    rtol=1e-12,
    atol=1e-14,
):
    """Deterministic squeeze control on the torus lift.

    Integrates dx/dt = -k(t) L sin(2 pi (x - eta(t))) over [0, 5] with the
    alternating schedule k = +1, -1, +1, -1, +1 on unit intervals and
    eta = z1, z1, z2, z2, z3, for an ensemble containing the three targets
    plus extra_points spanning [z3, z2].  Reports the three squeeze
    inequalities (with the +-1 lift conventions of the three windows) and
    the t = 2 time-reversal error.  reduced and sigma fix the phase model
    the control is attached to; they do not enter the controlled ODE itself
    (the control amplitude is absorbed into the gain).
    """
    z1, z2, z3 = targets
    eta_sched = [z1, z1, z2, z2, z3]
    k_sched = [1.0, -1.0, 1.0, -1.0, 1.0]
    ens = np.concatenate(
        [np.array([z1, z2, z3]), np.linspace(z3, z2, extra_points)]
    )
    times = [np.array([0.0])]
    states = [ens.copy()]
    x = ens.copy()
    for seg in range(5):
        eta, kk = eta_sched[seg], k_sched[seg]

        def rhs(t, y):
            return -kk * gain * np.sin(2.0 * np.pi * (y - eta))

        tgrid = np.linspace(seg, seg + 1, 21)
        sol = solve_ivp(rhs, (seg, seg + 1.0), x, t_eval=tgrid,
                        rtol=rtol, atol=atol, method="DOP853")
        if not sol.success:
            raise RuntimeError(f"squeeze integration failed on [{seg},{seg+1}]")
        x = sol.y[:, -1].copy()
        times.append(sol.t[1:])
        states.append(sol.y[:, 1:].T)
    times = np.concatenate(times)
    traj = np.vstack([states[0][None, :], *states[1:]])

    def at(t):
        return traj[np.argmin(np.abs(times - t))]

    g1, g3, g5 = at(1.0), at(3.0), at(5.0)
    i1, i2, i3 = 0, 1, 2  # ensemble slots of z1, z2, z3
    inequalities = {
        "t1": (z1 <= g1[i3] + 0.05 and g1[i3] < g1[i2] and g1[i2] <= z1 + 0.05,
               (g1[i3], g1[i2])),
        "t3": (z2 - 0.05 <= g3[i1] and g3[i1] < g3[i3] + 1.0
               and g3[i3] + 1.0 <= z2 + 0.05, (g3[i1], g3[i3] + 1.0)),
        "t5": (z3 - 0.05 <= g5[i2] - 1.0 and g5[i2] - 1.0 < g5[i1]
               and g5[i1] <= z3 + 0.05, (g5[i2] - 1.0, g5[i1])),
    }
    reversal = float(np.max(np.abs(at(2.0) - ens)))
    return SqueezeRecord(
        times=times,
        trajectories=traj,
        initial=ens,
        targets=targets,
        gain=gain,
        inequalities=inequalities,
        reversal_error=reversal,
    )
