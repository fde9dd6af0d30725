"""Spatially periodic noise specification and the trigonometric mode basis.

The driving noise is W(t, x) = sum_{|k| <= K} alpha_k e_k(x) beta_k(t) with
the orthonormal period-1 basis

    e_0 = 1,  e_k = sqrt(2) cos(2 pi k x) (k > 0),
    e_k = sqrt(2) sin(2 pi |k| x) (k < 0).

Modes are indexed k = -K..K throughout; arrays of per-mode quantities use
the storage order [0, +1, -1, +2, -2, ...] so that paired modes (k, -k) are
adjacent.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def mode_order(K):
    """Mode indices in storage order [0, 1, -1, 2, -2, ..., K, -K]."""
    out = [0]
    for k in range(1, K + 1):
        out.extend((k, -k))
    return out


def basis_function(k, x):
    """e_k evaluated at x (period 1)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    theta = 2.0 * np.pi * abs(k) * x
    if k > 0:
        return np.sqrt(2.0) * np.cos(theta)
    return np.sqrt(2.0) * np.sin(theta)


@dataclass(frozen=True)
class NoiseSpec:
    """Truncated periodic noise: coefficients alpha_k for |k| <= K, amplitude sigma."""

    K: int
    alpha: np.ndarray  # shape (2K+1,), alpha[K + k] is the coefficient of e_k
    sigma: float
    homogeneous: bool = field(default=None)

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K", "noise truncation K must be >= 1")
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (2 * self.K + 1,):
            raise ConfigError("alpha", f"expected {2 * self.K + 1} coefficients")
        object.__setattr__(self, "alpha", alpha)
        if self.sigma <= 0:
            raise ConfigError("sigma", "noise amplitude sigma must be positive")
        if self[1] == 0.0 or self[-1] == 0.0:
            raise ConfigError("alpha", "alpha_1 and alpha_-1 must both be nonzero")
        homog = bool(np.all(self.alpha == self.alpha[::-1]))
        if self.homogeneous is None:
            object.__setattr__(self, "homogeneous", homog)
        elif self.homogeneous != homog:
            raise ConfigError(
                "homogeneous", "homogeneity flag inconsistent with coefficients"
            )

    def __getitem__(self, k):
        """alpha_k for |k| <= K."""
        if abs(k) > self.K:
            raise IndexError(f"mode {k} outside truncation K={self.K}")
        return float(self.alpha[self.K + k])

    def alphas_ordered(self):
        """alpha_k in storage order [0, 1, -1, 2, -2, ...]."""
        return np.array([self[k] for k in mode_order(self.K)])

    def basis_fields(self, x):
        """Array (2K+1, len(x)) of alpha_k e_k(x) in storage order."""
        return np.stack(
            [self[k] * basis_function(k, x) for k in mode_order(self.K)]
        )


def homogeneous_noise(K=2, alpha_by_mode=None, sigma=0.1):
    """Noise spec with alpha_k = alpha_{-k} (synchronization-friendly default)."""
    if alpha_by_mode is None:
        alpha_by_mode = {0: 0.4, 1: 1.5, 2: 0.2}
    alpha = np.zeros(2 * K + 1)
    for k, a in alpha_by_mode.items():
        alpha[K + k] = a
        alpha[K - k] = a
    return NoiseSpec(K=K, alpha=alpha, sigma=sigma)


def inhomogeneous_noise(K=2, sigma=0.1):
    """Default noise spec with alpha_k != alpha_{-k}, exercising x-dependence."""
    alpha = np.zeros(2 * K + 1)
    table = {0: 0.4, 1: 1.5, -1: 0.9, 2: 0.3, -2: 0.1}
    for k, a in table.items():
        alpha[K + k] = a
    return NoiseSpec(K=K, alpha=alpha, sigma=sigma)
