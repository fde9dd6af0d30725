"""Stationary Fokker-Planck density on the unit torus and the analytic
Lyapunov-exponent identities.

The generator of the reduced phase SDE is

    L f = 1/2 sigma^2 B(x) f'' + (c + sigma^2 a(x)) f',   B = sum_k b_k^2,

and its formal adjoint L* p = 1/2 sigma^2 (B p)'' - ((c + sigma^2 a) p)'.
Since every coefficient is a trigonometric polynomial, Fourier spectral
collocation is essentially exact once the grid resolves the coefficient
harmonics; the stationary density is the one-dimensional nullspace of the
collocation matrix of L*.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeneratorError, PositivityError


def _diff_matrix(n, order=1):
    """Dense spectral differentiation matrix on the period-1 torus grid."""
    q = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    fac = (1j * q) ** order
    if order % 2 == 1:
        fac = fac.copy()
        fac[-1] = 0.0
    eye = np.eye(n)
    return np.fft.irfft(np.fft.rfft(eye, axis=-1) * fac, n=n, axis=-1).T


def _coefficient_fields(reduced, sigma, n):
    x = np.arange(n) / n
    B = reduced.diffusion_sq()(x)
    drift = reduced.speed + sigma ** 2 * reduced.a(x)
    return x, B, drift


@dataclass
class StationaryDensity:
    """Grid values of the stationary phase density on [0, 1)."""

    x: np.ndarray
    p: np.ndarray
    residual: float
    sigma: float

    @property
    def n(self):
        return self.x.size

    def mass(self):
        return float(np.mean(self.p))

    def __call__(self, xq):
        """Trigonometric interpolation of p at query points."""
        coef = np.fft.rfft(self.p) / self.n
        q = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=1.0 / self.n)
        weights = np.full(q.size, 2.0)
        weights[0] = 1.0
        if self.n % 2 == 0:
            weights[-1] = 1.0
        xq = np.asarray(xq, dtype=float)
        phase = np.exp(1j * np.outer(xq, q))
        return (phase * (weights * coef)).sum(axis=1).real


def adjoint_generator_matrix(reduced, sigma, n):
    """Collocation matrix of L* acting on grid values of p."""
    _, B, drift = _coefficient_fields(reduced, sigma, n)
    D1 = _diff_matrix(n, 1)
    D2 = _diff_matrix(n, 2)
    return 0.5 * sigma ** 2 * D2 @ np.diag(B) - D1 @ np.diag(drift)


def generator_matrix(reduced, sigma, n):
    """Collocation matrix of the generator L."""
    _, B, drift = _coefficient_fields(reduced, sigma, n)
    D1 = _diff_matrix(n, 1)
    D2 = _diff_matrix(n, 2)
    return 0.5 * sigma ** 2 * np.diag(B) @ D2 + np.diag(drift) @ D1


def stationary_density(reduced, sigma, n_fp=256, svd_threshold=1e-10):
    """Stationary density as the nullspace of the discretized L*.

    Raises DegenerateGeneratorError when the numerical nullspace is not
    one-dimensional at the threshold, PositivityError when the normalized
    candidate is not strictly positive (under-resolution).
    """
    M = adjoint_generator_matrix(reduced, sigma, n_fp)
    _, svals, vt = np.linalg.svd(M)
    scale = svals[0]
    null_mask = svals <= svd_threshold * scale
    if np.count_nonzero(null_mask) != 1:
        raise DegenerateGeneratorError(
            f"nullspace dimension {np.count_nonzero(null_mask)} at threshold "
            f"{svd_threshold:g} (singular values {svals[-3:] / scale})"
        )
    p = vt[-1]
    if p.mean() < 0:
        p = -p
    p = p / p.mean()  # trapezoidal integral over [0,1) is the grid mean
    if np.any(p <= 0):
        raise PositivityError(
            f"density has non-positive values (min {p.min():.3e}); "
            "increase n_fp"
        )
    residual = float(np.linalg.norm(M @ p) / np.sqrt(n_fp))
    x = np.arange(n_fp) / n_fp
    return StationaryDensity(x=x, p=p, residual=residual, sigma=sigma)


def lyapunov_analytic(reduced, sigma, density):
    """The two analytic Lyapunov-exponent identities (lambda_A, lambda_B).

    lambda_A = sigma^2 int (a' - 1/2 sum_k (b_k')^2) dmu and
    lambda_B = -1/2 sigma^2 sum_k int (d/dx (b_k p))^2 / p dx, both by
    trapezoidal quadrature with analytic coefficient derivatives.
    """
    x, p = density.x, density.p
    n = x.size
    da = reduced.da(x)
    sum_bp2 = np.zeros(n)
    for k in reduced.db:
        sum_bp2 += reduced.db[k](x) ** 2
    lam_a = sigma ** 2 * float(np.mean((da - 0.5 * sum_bp2) * p))
    D1 = _diff_matrix(n, 1)
    dp = D1 @ p
    lam_b = 0.0
    for k in reduced.b:
        bk = reduced.b[k](x)
        dbk = reduced.db[k](x)
        flux = dbk * p + bk * dp
        lam_b += float(np.mean(flux ** 2 / p))
    lam_b *= -0.5 * sigma ** 2
    return lam_a, lam_b


def generator_gap(reduced, sigma, n_fp=256, tol_zero=1e-8):
    """Mixing-rate estimate: negative real part of the second generator
    eigenvalue (the first must vanish)."""
    G = generator_matrix(reduced, sigma, n_fp)
    ev = np.linalg.eigvals(G)
    idx = np.argsort(np.abs(ev))
    scale = max(1.0, np.max(np.abs(ev)))
    if abs(ev[idx[0]]) > tol_zero * scale:
        raise DegenerateGeneratorError(
            f"leading generator eigenvalue {ev[idx[0]]:.3e} not within "
            f"{tol_zero:g} of zero"
        )
    rest = np.delete(ev, idx[0])
    return float(-np.max(rest.real))
