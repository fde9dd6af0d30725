"""End-to-end acceptance suite.

Each test class checks one headline guarantee of the laboratory at its
stated tolerance, from the deterministic pulse pipeline through the phase
reduction, the torus SDE, the stationary Fokker-Planck analysis, and the
full stochastic-PDE synchronization runs.  The suite is deliberately
expensive (tens of minutes); the unit suites cover the same machinery at
toy sizes.
"""

import time
from dataclasses import replace

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import ks_2samp

from pulselab.fokker_planck import lyapunov_analytic, stationary_density
from pulselab.grid import Grid1D
from pulselab.noise import basis_function, inhomogeneous_noise, mode_order
from pulselab.phase import default_relax_time, isochron_map
from pulselab.presets import default_pulse
from pulselab.sde import (NoisePath, TorusEnsemble, controlled_squeeze,
                          rescale_noise, simulate, stationary_samples,
                          sync_scaling_scan, tangent_lyapunov_mc)
from pulselab.spde import two_pulse_experiment

from conftest import make_synthetic_reduced


class TestPulsePipeline:
    """Converged pulse, adjoint, and spectrum at N = 1024."""

    def test_high_resolution_pipeline(self):
        t0 = time.perf_counter()
        p = default_pulse(grid=Grid1D(20, 1024))
        elapsed = time.perf_counter() - t0
        assert p.residual_bvp <= 1e-8
        assert p.residual_adj <= 1e-8
        assert p.a_gap > 0
        assert abs(p.zero_eigenvalue) <= 1e-6
        assert p.zero_mode_cosine >= 1 - 1e-6
        nzero = int(np.sum(np.abs(p.eigenvalues) <= 1e-6))
        assert nzero == 1
        assert elapsed <= 60.0


def _smooth_direction(grid, rng, ncomp=2, kmax=6):
    """Random band-limited, unit-norm perturbation field."""
    w = np.zeros((ncomp, grid.npoints))
    for comp in range(ncomp):
        w[comp] += rng.normal() * 0.3
        for k in range(1, kmax + 1):
            arg = 2.0 * np.pi * k * grid.x / grid.length
            w[comp] += rng.normal() * np.cos(arg) + rng.normal() * np.sin(arg)
    return w / grid.norm(w)


class TestIsochronGradient:
    """The isochron gradient at the pulse is the adjoint."""

    def test_fd_matches_adjoint_pairing(self, pulse, model):
        t0 = time.perf_counter()
        t_relax = default_relax_time(pulse)
        rng = np.random.default_rng(2026)
        eps = 1e-3
        for _ in range(10):
            w = _smooth_direction(pulse.grid, rng, ncomp=model.ncomp)
            pp = isochron_map(pulse.profile + eps * w, pulse, model,
                              t_relax, near=0.0)
            pm = isochron_map(pulse.profile - eps * w, pulse, model,
                              t_relax, near=0.0)
            fd = (pp - pm) / (2.0 * eps)
            exact = pulse.grid.inner(pulse.adjoint, w)
            assert abs(fd - exact) <= 1e-2 * abs(exact)
        assert time.perf_counter() - t0 <= 600.0


class TestCoefficientAssembly:
    """Assembled drift/diffusion coefficients against direct
    finite differences of the isochron map at random translates."""

    def test_fd_at_random_translates(self, pulse, model, reduced_inhom):
        noise = reduced_inhom.noise
        grid = pulse.grid
        t_relax = default_relax_time(pulse)
        eps = 1e-2
        rng = np.random.default_rng(31)
        for gamma in rng.uniform(0.0, grid.length, size=5):
            u_g = pulse.translate(gamma)
            gu = model.g(u_g)
            base = isochron_map(u_g, pulse, model, t_relax, near=gamma)
            b_fd, b_exact = [], []
            a_fd = 0.0
            for k in mode_order(noise.K):
                v = gu * basis_function(k, grid.x)[None, :]
                pp = isochron_map(u_g + eps * v, pulse, model, t_relax,
                                  near=gamma)
                pm = isochron_map(u_g - eps * v, pulse, model, t_relax,
                                  near=gamma)
                b_fd.append(noise[k] * (pp - pm) / (2.0 * eps))
                b_exact.append(reduced_inhom.b[k](gamma))
                # additive model: the d-pairings vanish, so the drift is
                # half the weighted sum of second variations
                a_fd += 0.5 * noise[k] ** 2 * (pp + pm - 2.0 * base) / eps ** 2
            b_fd, b_exact = np.array(b_fd), np.array(b_exact)
            assert (np.linalg.norm(b_fd - b_exact)
                    <= 5e-2 * np.linalg.norm(b_exact))
            a_exact = reduced_inhom.a(gamma)
            assert abs(a_fd - a_exact) <= 5e-2 * abs(a_exact)


class TestCoefficientStructure:
    """Structural identities of the reduced coefficients."""

    def test_b0_derivative_identically_zero(self, reduced_homog,
                                            reduced_inhom):
        for reduced in (reduced_homog, reduced_inhom):
            assert reduced.db[0].order == 0
            assert reduced.db[0].mean == 0.0

    def test_series_are_periodic(self, reduced_inhom):
        xs = np.random.default_rng(5).uniform(-3, 3, 64)
        for series in [reduced_inhom.a] + list(reduced_inhom.b.values()):
            assert np.allclose(series(xs + 1.0), series(xs),
                               rtol=0, atol=1e-12)

    def test_homogeneous_coefficients_constant(self, reduced_homog):
        xs = np.arange(4096) / 4096.0
        a = reduced_homog.a(xs)
        assert np.ptp(a) <= 1e-10 * max(1.0, np.max(np.abs(a)))
        B = reduced_homog.diffusion_sq()(xs)
        assert np.ptp(B) <= 1e-10 * np.max(B)


class TestLyapunovExponent:
    """The two analytic Lyapunov identities agree with each
    other and with a long Monte Carlo tangent run."""

    def test_identities_agree(self, reduced_inhom):
        sigma = 0.1
        dens = stationary_density(reduced_inhom, sigma, n_fp=256)
        lam_a, lam_b = lyapunov_analytic(reduced_inhom, sigma, dens)
        assert lam_a < 0 and lam_b < 0
        assert abs(lam_a - lam_b) <= 1e-6 * abs(lam_a)

    def test_monte_carlo_matches(self, reduced_inhom):
        sigma = 0.1
        dens = stationary_density(reduced_inhom, sigma, n_fp=256)
        lam_a, _ = lyapunov_analytic(reduced_inhom, sigma, dens)
        t0 = time.perf_counter()
        T = 1e4 / sigma ** 2
        path = NoisePath(seed=0, dt=4e-3, horizon=T, K=reduced_inhom.K)
        lam_mc, stderr = tangent_lyapunov_mc(
            reduced_inhom, sigma, 0.2, path, T, burn_in=0.05 * T)
        assert abs(lam_mc - lam_a) <= 3.0 * stderr
        assert time.perf_counter() - t0 <= 300.0


class TestStationaryDensity:
    """Stationary Fokker-Planck density quality."""

    def test_positive_normalized_small_residual(self, reduced_inhom):
        dens = stationary_density(reduced_inhom, 0.1, n_fp=256)
        assert np.all(dens.p > 0)
        assert abs(dens.mass() - 1.0) <= 1e-12
        assert dens.residual <= 1e-8

    def test_homogeneous_density_is_uniform(self, reduced_homog):
        dens = stationary_density(reduced_homog, 0.1, n_fp=256)
        assert np.max(np.abs(dens.p - 1.0)) <= 1e-8


class TestTimeChange:
    """Discrete time-change and moving-frame identities of the
    Euler-Maruyama scheme under the measure-preserving path transforms."""

    def _final_lift(self, reduced, sigma, path, duration, x0=0.37):
        rec = simulate(reduced, sigma, TorusEnsemble(np.array([x0])), path,
                       duration)
        return rec.lifts[-1, 0]

    def test_zero_speed_rescaling_is_exact(self, reduced_inhom):
        sigma = 0.25
        still = replace(reduced_inhom, speed=0.0)
        T = 50.0
        path = NoisePath(seed=3, dt=1e-3, horizon=T, K=still.K)
        lab = self._final_lift(still, sigma, path, T)
        resc = self._final_lift(still, 1.0, rescale_noise(path, 0.0, sigma),
                                sigma ** 2 * T)
        assert abs(lab - resc) <= 1e-10

    def test_moving_frame_homogeneous(self, reduced_homog):
        sigma = 0.2
        c = reduced_homog.speed
        T = 50.0
        for dt in (2e-3, 4e-3):
            path = NoisePath(seed=11, dt=dt, horizon=T, K=reduced_homog.K)
            lab = self._final_lift(reduced_homog, sigma, path, T)
            rot = replace(path, rot_speed=c)
            com = self._final_lift(replace(reduced_homog, speed=0.0), sigma,
                                   rot, T)
            assert abs(lab - c * T - com) <= 1e-9

    def test_full_time_change_homogeneous(self, reduced_homog):
        sigma = 0.2
        c = reduced_homog.speed
        T = 50.0
        path = NoisePath(seed=7, dt=1e-3, horizon=T, K=reduced_homog.K)
        lab = self._final_lift(reduced_homog, sigma, path, T)
        com = self._final_lift(replace(reduced_homog, speed=0.0), 1.0,
                               rescale_noise(path, c, sigma), sigma ** 2 * T)
        assert abs(lab - c * T - com) <= 1e-9

    def test_moving_frame_fails_for_inhomogeneous_noise(self, reduced_inhom):
        sigma = 0.2
        c = reduced_inhom.speed
        T = 50.0
        path = NoisePath(seed=11, dt=2e-3, horizon=T, K=reduced_inhom.K)
        lab = self._final_lift(reduced_inhom, sigma, path, T)
        com = self._final_lift(replace(reduced_inhom, speed=0.0), sigma,
                               replace(path, rot_speed=c), T)
        assert abs(lab - c * T - com) > 1e-4


class TestSyncScaling:
    """Median synchronization time scales like sigma^-2."""

    def test_slope_of_median_sync_times(self, reduced_homog):
        scan = sync_scaling_scan(
            reduced_homog, [0.2, 0.14, 0.1, 0.07, 0.05], reps=200,
            threshold=0.01, base_seed=0, dt_cap=2e-3)
        assert all(not row.unreliable for row in scan.rows)
        assert -2.3 <= scan.slope <= -1.7


def _exact_cdf(reduced, sigma):
    dens = stationary_density(reduced, sigma, n_fp=1024)
    xf = np.linspace(0.0, 1.0, 4097)
    pf = dens(xf)
    cdf = cumulative_trapezoid(pf, xf, initial=0.0)
    cdf /= cdf[-1]
    return xf, cdf


def _ks_vs_cdf(samples, xf, cdf):
    s = np.sort(samples)
    n = s.size
    F = np.interp(s, xf, cdf)
    grid = np.arange(n, dtype=float)
    return max(np.max((grid + 1.0) / n - F), np.max(F - grid / n))


class TestSchemeFidelity:
    """Cocycle property, shared-noise order preservation, and
    Ito-vs-Stratonovich stationary-law agreement under step refinement."""

    def test_cocycle_bit_exact(self, reduced_inhom):
        sigma = 0.3
        path = NoisePath(seed=21, dt=1e-3, horizon=40.0, K=reduced_inhom.K)
        ens = TorusEnsemble(np.array([0.1, 0.45, 0.8]))
        whole = simulate(reduced_inhom, sigma, ens, path, 24.0)
        for t_split in (6.0, 12.0):
            first = simulate(reduced_inhom, sigma, ens, path, t_split)
            rest = simulate(reduced_inhom, sigma, first.final,
                            path.shifted(int(round(t_split / path.dt))),
                            24.0 - t_split)
            assert np.array_equal(rest.final.positions,
                                  whole.final.positions)

    def test_shared_noise_preserves_order(self, reduced_inhom):
        sigma = 0.3
        path = NoisePath(seed=4, dt=1e-3, horizon=30.0, K=reduced_inhom.K)
        x0 = np.sort(np.random.default_rng(0).uniform(0, 1, 8))
        rec = simulate(reduced_inhom, sigma, TorusEnsemble(x0), path, 30.0,
                       record_stride=100)
        gaps = np.diff(rec.lifts, axis=1)
        assert np.all(gaps > 0)
        assert np.all(gaps < 1)

    def test_schemes_converge_to_the_same_stationary_law(self):
        # strong inhomogeneous diffusion at sigma = 1 so the O(dt)
        # discretization bias is resolvable above the sampling floor
        reduced = make_synthetic_reduced(noise=inhomogeneous_noise(),
                                         d_scale=0.5, speed=0.0)
        sigma = 1.0
        xf, cdf = _exact_cdf(reduced, sigma)
        dts = (0.1, 0.05, 0.025)
        ks = {}
        samples = {}
        for scheme, seed in (("ito", 1), ("stratonovich", 2)):
            for dt in dts:
                n = int(round(4.0 / dt))
                s = stationary_samples(
                    reduced, sigma, dt, nwalkers=200000, nsteps=n,
                    seed=seed, scheme=scheme, burn_steps=n // 2,
                    sample_stride=n // 8)
                ks[scheme, dt] = _ks_vs_cdf(s, xf, cdf)
                samples[scheme, dt] = s
        for scheme in ("ito", "stratonovich"):
            vals = [ks[scheme, dt] for dt in dts]
            # quartering dt at least halves the distance to the exact law
            assert vals[2] < 0.55 * vals[0]
            assert vals[0] > vals[1] > vals[2]
        # the two schemes approach each other as dt -> 0
        d_coarse = ks_2samp(samples["ito", 0.1],
                            samples["stratonovich", 0.1]).statistic
        d_fine = ks_2samp(samples["ito", 0.025],
                          samples["stratonovich", 0.025]).statistic
        assert d_fine < d_coarse
        assert d_fine < 0.01


class TestTwoPulseSynchronization:
    """Full stochastic-PDE shared-noise synchronization of two
    pulse translates offset by 0.3 at sigma = 0.1."""

    def test_first_passage_and_tube(self, cap_pulse, cap_model, cap_noise):
        t0 = time.perf_counter()
        sigma, horizon, threshold = 0.1, 5000.0, 0.05
        hits, ratios, max_tube = [], [], 0.0
        for seed in range(20):
            rep = two_pulse_experiment(
                2.0, 2.3, cap_model, cap_noise, sigma, horizon, seed=seed,
                pulse=cap_pulse, dt=0.02, checkpoint_stride=1250)
            assert not rep.censored
            close = rep.phase_distance < threshold
            hits.append(rep.times[np.argmax(close)] if np.any(close)
                        else np.inf)
            # deepest approach relative to the initial offset discrepancy
            ratios.append(np.min(rep.discrepancy[1:]) / rep.discrepancy[0])
            max_tube = max(max_tube, np.max(rep.run_u.tube),
                           np.max(rep.run_v.tube))
        assert np.median(hits) <= horizon
        assert max_tube < 5.0 * sigma
        assert np.median(ratios) <= 0.1
        assert time.perf_counter() - t0 <= 7200.0


class TestControlledSqueeze:
    """The three squeeze inequalities and time reversal of the
    deterministic control schedule."""

    def test_inequalities_and_reversal(self, reduced_homog):
        rec = controlled_squeeze(reduced_homog, 0.05, gain=2.0)
        assert rec.gain == 2.0
        for name, (ok, _) in rec.inequalities.items():
            assert ok, name
        assert rec.reversal_error <= 1e-8
