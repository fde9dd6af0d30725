import numpy as np
import pytest

from pulselab.noise import homogeneous_noise, inhomogeneous_noise
from pulselab.presets import (capstone_model, capstone_noise, capstone_pulse,
                              default_model, default_pulse)
from pulselab.reduction import (PairingSet, ReducedModel, build_a, build_b,
                                build_reduced_model, q_matrix)


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def pulse():
    return default_pulse()


@pytest.fixture(scope="session")
def qmat(pulse, model):
    """Second-variation pairing matrix for the default configuration."""
    return q_matrix(pulse, model, K=2)


@pytest.fixture(scope="session")
def reduced_homog(pulse, model, qmat):
    return build_reduced_model(pulse, model, homogeneous_noise(), Q=qmat)


@pytest.fixture(scope="session")
def reduced_inhom(pulse, model, qmat):
    return build_reduced_model(pulse, model, inhomogeneous_noise(), Q=qmat)


@pytest.fixture(scope="session")
def cap_pulse():
    return capstone_pulse()


@pytest.fixture(scope="session")
def cap_model():
    return capstone_model()


@pytest.fixture(scope="session")
def cap_noise():
    return capstone_noise()


def make_synthetic_reduced(K=2, seed=7, speed=0.1, noise=None, d_scale=0.0,
                           drift_free=False):
    """Representative reduced model from fabricated pairings (no PDE work).

    Used by torus-SDE and density tests that exercise the stepping and
    quadrature machinery rather than the reduction pipeline.  drift_free
    zeroes the drift coefficient (keeping the diffusion) for closed-form
    density checks.
    """
    if noise is None:
        noise = homogeneous_noise(K=K)
    rng = np.random.default_rng(seed)
    c = {k: float(v) for k, v in
         zip(range(-K, K + 1), rng.normal(0.0, 0.3, 2 * K + 1))}
    c[0] = 1.5
    d = {}
    for k in range(K + 1):
        d[2 * k] = float(d_scale * rng.normal())
        d[-2 * k] = float(d_scale * rng.normal())
    d[0] = float(d_scale * rng.normal())
    Q = {}
    for i in range(-K, K + 1):
        for j in range(i, K + 1):
            Q[(i, j)] = float(rng.normal(0.0, 0.5))
    pairings = PairingSet(K=K, c=c, d=d, Q=Q)
    a = build_a(noise, pairings)
    b = build_b(noise, pairings)
    if drift_free:
        a = 0.0 * a
    return ReducedModel(speed=speed, noise=noise, a=a, da=a.derivative(),
                        b=b, db={k: s.derivative() for k, s in b.items()},
                        pairings=pairings)


@pytest.fixture
def synthetic_reduced():
    return make_synthetic_reduced()
