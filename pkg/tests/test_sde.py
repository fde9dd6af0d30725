import math
from dataclasses import replace

import numpy as np
import pytest

from pulselab.kernels import available_backends, get_backend
from pulselab.noise import homogeneous_noise, inhomogeneous_noise
from pulselab.sde import (CoeffTables, NoisePath, SyncResult, TorusEnsemble,
                          controlled_squeeze, default_dt, rescale_noise,
                          simulate, stationary_samples, sync_scaling_scan,
                          sync_time, tangent_lyapunov_mc, torus_distance)

from conftest import make_synthetic_reduced


class TestNoisePath:
    def test_shifted_reproduces_later_increments(self):
        path = NoisePath(seed=3, dt=1e-3, horizon=1.0, K=2)
        assert np.array_equal(path.shifted(40).increments(0, 10),
                              path.increments(40, 50))

    def test_increment_variance_scaling(self):
        path = NoisePath(seed=9, dt=4e-4, horizon=4.0, K=1)
        z = path.increments(0, path.nsteps)
        assert abs(z.var() - path.dt) < 0.05 * path.dt
        amped = replace(path, amp=2.0)  # power of two: scaling is exact
        assert np.array_equal(amped.increments(0, 100),
                              2.0 * path.increments(0, 100))

    def test_rotation_preserves_pair_norms_and_mode_zero(self):
        path = NoisePath(seed=1, dt=1e-3, horizon=1.0, K=2)
        rot = replace(path, rot_speed=0.7)
        z0, z1 = path.increments(0, 200), rot.increments(0, 200)
        assert np.array_equal(z0[:, 0], z1[:, 0])
        for k in (1, 2):
            jp, jm = 2 * k - 1, 2 * k
            n0 = z0[:, jp] ** 2 + z0[:, jm] ** 2
            n1 = z1[:, jp] ** 2 + z1[:, jm] ** 2
            assert np.allclose(n0, n1, rtol=1e-12, atol=1e-15)

    def test_invalid_path_rejected(self):
        with pytest.raises(ValueError):
            NoisePath(seed=0, dt=-1e-3, horizon=1.0, K=1)


class TestBackends:
    @pytest.mark.skipif(len(available_backends()) < 2,
                        reason="compiled backend not built")
    def test_backends_bit_exact(self, synthetic_reduced):
        path = NoisePath(seed=17, dt=1e-3, horizon=5.0, K=2)
        ens = TorusEnsemble([0.05, 0.42, 0.9], tangent=[1.0, 1.0, 1.0])
        recs = {}
        for backend in available_backends():
            recs[backend] = simulate(synthetic_reduced, 0.3, ens, path, 4.0,
                                     record_stride=500, tangent=True,
                                     backend=backend)
        a, b = recs["python"], recs["cython"]
        assert np.array_equal(a.lifts, b.lifts)
        assert np.array_equal(a.ell, b.ell)
        assert np.array_equal(a.final.positions, b.final.positions)

    @pytest.mark.skipif(len(available_backends()) < 2,
                        reason="compiled backend not built")
    def test_two_point_kernel_bit_exact(self, synthetic_reduced):
        path = NoisePath(seed=23, dt=1e-3, horizon=50.0, K=2)
        res = {
            backend: sync_time(synthetic_reduced, 0.25, 0.1, 0.6, 0.01, path,
                               backend=backend)
            for backend in available_backends()
        }
        assert res["python"] == res["cython"]


class TestCocycle:
    def test_split_run_bit_exact(self, synthetic_reduced):
        """Restarting from a recorded state and the shifted path continues
        the original run bit-for-bit."""
        path = NoisePath(seed=5, dt=1e-3, horizon=40.0, K=2)
        ens = TorusEnsemble([0.11, 0.37, 0.81])
        full = simulate(synthetic_reduced, 0.3, ens, path, 30.0)
        for t_mid in (6.0, 12.0, 24.0):
            first = simulate(synthetic_reduced, 0.3, ens, path, t_mid)
            rest = simulate(synthetic_reduced, 0.3, first.final,
                            path.shifted(int(round(t_mid / path.dt))),
                            30.0 - t_mid)
            assert np.array_equal(rest.final.positions, full.final.positions)

    def test_tangent_cocycle_multiplicative(self, synthetic_reduced):
        """The tangent factor composes: log D(30) = log D(12) + log D(18)
        along the split run, bit-for-bit."""
        path = NoisePath(seed=6, dt=1e-3, horizon=40.0, K=2)
        ens = TorusEnsemble([0.3], tangent=[1.0])
        full = simulate(synthetic_reduced, 0.3, ens, path, 30.0, tangent=True)
        first = simulate(synthetic_reduced, 0.3, ens, path, 12.0, tangent=True)
        rest = simulate(synthetic_reduced, 0.3, first.final,
                        path.shifted(12000), 18.0, tangent=True)
        assert rest.ell[-1, 0] == full.ell[-1, 0]


class TestOrderPreservation:
    def test_shared_noise_keeps_ordering(self, synthetic_reduced):
        """Distinct walkers under the same noise never cross: lift gaps stay
        positive and below one for the whole run."""
        path = NoisePath(seed=8, dt=5e-4, horizon=80.0, K=2)
        start = np.sort(np.random.default_rng(0).uniform(0, 1, 8))
        rec = simulate(synthetic_reduced, 0.4, TorusEnsemble(start), path,
                       60.0, record_stride=200)
        gaps = np.diff(rec.lifts, axis=1)
        assert np.all(gaps > 0)
        assert np.all(gaps < 1)

    def test_two_point_contraction(self):
        reduced = make_synthetic_reduced(noise=homogeneous_noise())
        path = NoisePath(seed=12, dt=1e-3, horizon=100.0, K=2)
        rec = simulate(reduced, 0.3, TorusEnsemble([0.0, 0.2]), path, 100.0,
                       record_stride=5000)
        d = torus_distance(rec.lifts[:, 0], rec.lifts[:, 1])
        assert d[-1] < d[0]


class TestRescaling:
    def test_time_change_zero_speed_pathwise(self):
        """With c = 0 the sigma time change is a pathwise identity at
        matching steps, to round-off."""
        reduced = make_synthetic_reduced(noise=inhomogeneous_noise(),
                                         speed=0.0)
        sig = 0.4
        path = NoisePath(seed=5, dt=2e-3, horizon=30.0, K=2)
        slow = simulate(reduced, sig, TorusEnsemble([0.2]), path, 20.0,
                        record_stride=500)
        fast = simulate(reduced, 1.0, TorusEnsemble([0.2]),
                        rescale_noise(path, 0.0, sig), 20.0 * sig ** 2,
                        record_stride=500)
        assert np.allclose(fast.times, sig ** 2 * slow.times,
                           rtol=1e-12, atol=0)
        assert np.max(np.abs(slow.lifts - fast.lifts)) < 1e-10

    def test_time_change_moving_frame_homogeneous(self):
        """With c != 0 and homogeneous noise, rotating the mode pairs at
        rate c turns the comoving process into the lab-frame one; the
        pathwise discrepancy stays at round-off (in particular it decays at
        order >= 1/2 under dt-halving)."""
        reduced = make_synthetic_reduced(noise=homogeneous_noise(),
                                         speed=0.13)
        still = replace(reduced, speed=0.0)
        sig = 0.4
        errs = []
        for dt in (4e-3, 2e-3):
            path = NoisePath(seed=7, dt=dt, horizon=30.0, K=2)
            lab = simulate(reduced, sig, TorusEnsemble([0.2]), path, 20.0,
                           record_stride=1000)
            co = simulate(still, 1.0, TorusEnsemble([0.2]),
                          rescale_noise(path, reduced.speed, sig),
                          20.0 * sig ** 2, record_stride=1000)
            diff = (lab.lifts[:, 0] - reduced.speed * lab.times) \
                - co.lifts[:, 0]
            errs.append(np.max(np.abs(diff)))
        assert errs[0] < 1e-9 and errs[1] < 1e-9

    def test_time_change_fails_for_inhomogeneous(self):
        """The moving-frame identity requires alpha_k = alpha_{-k}; with
        asymmetric amplitudes the discrepancy is O(1)."""
        reduced = make_synthetic_reduced(noise=inhomogeneous_noise(),
                                         speed=0.13)
        still = replace(reduced, speed=0.0)
        path = NoisePath(seed=7, dt=2e-3, horizon=30.0, K=2)
        lab = simulate(reduced, 0.4, TorusEnsemble([0.2]), path, 20.0)
        co = simulate(still, 1.0, TorusEnsemble([0.2]),
                      rescale_noise(path, reduced.speed, 0.4),
                      20.0 * 0.4 ** 2)
        diff = (lab.lifts[-1, 0] - reduced.speed * 20.0) - co.lifts[-1, 0]
        assert abs(diff) > 1e-4


class TestSyncTime:
    def test_immediate_when_already_close(self, synthetic_reduced):
        path = NoisePath(seed=0, dt=1e-3, horizon=1.0, K=2)
        res = sync_time(synthetic_reduced, 0.2, 0.10, 0.105, 0.01, path)
        assert res == SyncResult(0.0, False)

    def test_censoring_at_horizon(self):
        """sigma = 0 never synchronizes distinct phases."""
        reduced = make_synthetic_reduced(noise=homogeneous_noise())
        path = NoisePath(seed=0, dt=1e-3, horizon=2.0, K=2)
        res = sync_time(reduced, 0.0, 0.0, 0.5, 0.01, path)
        assert res.censored
        assert res.time == pytest.approx(2.0)

    def test_hit_time_matches_trajectory(self):
        """The first-passage step reported by the two-point kernel agrees
        with an independently simulated shared-noise pair."""
        reduced = make_synthetic_reduced(noise=homogeneous_noise())
        sigma, thr = 0.3, 0.01
        path = NoisePath(seed=21, dt=1e-3, horizon=400.0, K=2)
        res = sync_time(reduced, sigma, 0.0, 1.0 / 3.0, thr, path)
        assert not res.censored
        rec = simulate(reduced, sigma, TorusEnsemble([0.0, 1.0 / 3.0]), path,
                       res.time, record_stride=1)
        d = torus_distance(rec.lifts[:, 0], rec.lifts[:, 1])
        assert np.all(d[:-1] >= thr)
        assert d[-1] < thr

    def test_scan_slope_negative(self):
        reduced = make_synthetic_reduced(noise=homogeneous_noise())
        scan = sync_scaling_scan(reduced, [0.3, 0.2], reps=8, threshold=0.01,
                                 base_seed=1, horizon_factor=100.0)
        assert scan.slope < 0
        assert all(not r.unreliable for r in scan.rows)


class TestLyapunovMc:
    def test_negative_and_reproducible(self):
        reduced = make_synthetic_reduced(noise=homogeneous_noise())
        path = NoisePath(seed=2, dt=1e-3, horizon=2000.0, K=2)
        lam, err = tangent_lyapunov_mc(reduced, 0.3, 0.1, path, 2000.0, 100.0)
        assert lam < 0
        assert err < abs(lam)
        lam2, _ = tangent_lyapunov_mc(reduced, 0.3, 0.1, path, 2000.0, 100.0)
        assert lam == lam2


class TestDefaultDt:
    def test_cap_and_monotonicity(self, synthetic_reduced):
        assert default_dt(synthetic_reduced, 0.05) <= 1e-3
        assert default_dt(synthetic_reduced, 0.5) <= \
            default_dt(synthetic_reduced, 0.05)


class TestStationarySampler:
    def test_schemes_and_stride(self, synthetic_reduced):
        out = stationary_samples(synthetic_reduced, 0.5, 0.05, 64, 40,
                                 seed=3, scheme="ito", sample_stride=10)
        assert out.shape == (2 * 64,)
        assert np.all((out >= 0) & (out < 1))
        with pytest.raises(ValueError):
            stationary_samples(synthetic_reduced, 0.5, 0.05, 8, 10,
                               scheme="heun")

    def test_ito_and_stratonovich_agree_statistically(self):
        """Coarse check that the two discretizations sample the same law;
        the acceptance suite measures the KS decay under dt-halving."""
        from scipy.stats import ks_2samp
        reduced = make_synthetic_reduced(noise=inhomogeneous_noise(),
                                         speed=0.0, d_scale=0.3)
        a = stationary_samples(reduced, 0.6, 0.02, 4000, 1000, seed=1,
                               scheme="ito")
        b = stationary_samples(reduced, 0.6, 0.02, 4000, 1000, seed=2,
                               scheme="stratonovich")
        assert ks_2samp(a, b).pvalue > 1e-3


class TestSqueeze:
    def test_inequalities_and_reversal(self, synthetic_reduced):
        rec = controlled_squeeze(synthetic_reduced, 0.1, gain=2.0)
        assert all(ok for ok, _ in rec.inequalities.values())
        assert rec.reversal_error < 1e-8

    def test_weak_gain_fails_squeeze(self, synthetic_reduced):
        rec = controlled_squeeze(synthetic_reduced, 0.1, gain=0.05)
        assert not all(ok for ok, _ in rec.inequalities.values())
