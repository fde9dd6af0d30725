"""Traveling-pulse computation: Newton BVP solve, adjoint, spectral diagnostics."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegeneratePulseError,
    IllConditionedNullspaceError,
    NoPulseError,
)
from .grid import FieldState, Grid1D


def linearization_matrix(grid, model, u, c):
    """Dense discretization of L = D d_xx + c d_x + f'(u), shape (nN, nN)."""
    n = model.ncomp
    N = grid.npoints
    d1 = grid.diff_matrix(1)
    d2 = grid.diff_matrix(2)
    jac = model.f_jac(u)  # (n, n, N)
    L = np.zeros((n * N, n * N))
    for i in range(n):
        bi = slice(i * N, (i + 1) * N)
        L[bi, bi] += model.diffusion[i] * d2 + c * d1
        for j in range(n):
            bj = slice(j * N, (j + 1) * N)
            L[bi, bj] += np.diag(jac[i, j])
    return L


@dataclass
class PulseSolution:
    """Converged traveling-pulse profile with adjoint and spectral diagnostics."""

    grid: Grid1D
    profile: np.ndarray       # u*, shape (n, N)
    speed: float              # c
    dprofile: np.ndarray      # d_x u*, shape (n, N)
    adjoint: np.ndarray       # psi, shape (n, N), <psi, d_x u*> = -1
    residual_bvp: float
    residual_adj: float
    a_gap: float
    eigenvalues: np.ndarray = field(repr=False)
    zero_eigenvalue: complex = 0.0
    zero_mode_cosine: float = 1.0

    @property
    def field(self):
        return FieldState(self.grid, self.profile.copy())

    def translate(self, x):
        """T_x u* via Fourier shift."""
        return self.grid.shift_field(self.profile, x)

    def norm(self):
        return self.grid.norm(self.profile)


def _bvp_residual(grid, model, u, c):
    uxx = grid.deriv(u, 2)
    ux = grid.deriv(u, 1)
    D = np.asarray(model.diffusion)[:, None]
    return D * uxx + c * ux + model.f(u)


def find_pulse(
    model,
    guess,
    guess_speed,
    tol=1e-10,
    max_iter=30,
    tol_eig=1e-6,
    with_spectrum=True,
):
    """Newton solve of the periodic traveling-wave BVP D u'' + c u' + f(u) = 0.

    The translational degeneracy is removed with the phase condition
    <guess', u - guess> = 0 (derivative of the initial guess, frozen).
    Returns a fully populated PulseSolution.
    """
    grid = guess.grid
    n = model.ncomp
    N = grid.npoints
    u = guess.values.copy()
    c = float(guess_speed)
    g0 = guess.values.copy()
    g0x = grid.deriv(g0, 1)
    phase_row = grid.h * g0x.reshape(-1)

    d1 = grid.diff_matrix(1)
    res = _bvp_residual(grid, model, u, c)
    resnorm = grid.norm(res)
    for it in range(max_iter):
        if resnorm <= tol:
            break
        L = linearization_matrix(grid, model, u, c)
        ux = grid.deriv(u, 1)
        J = np.zeros((n * N + 1, n * N + 1))
        J[: n * N, : n * N] = L
        J[: n * N, -1] = ux.reshape(-1)
        J[-1, : n * N] = phase_row
        rhs = np.empty(n * N + 1)
        rhs[: n * N] = -res.reshape(-1)
        rhs[-1] = -grid.inner(g0x, u - g0)
        try:
            delta = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError as exc:
            raise DegeneratePulseError(
                f"singular Newton Jacobian at iteration {it}"
            ) from exc
        u = u + delta[: n * N].reshape(n, N)
        c = c + delta[-1]
        res = _bvp_residual(grid, model, u, c)
        resnorm = grid.norm(res)
        if not np.isfinite(resnorm):
            raise NoPulseError(resnorm, it + 1)
    else:
        raise NoPulseError(resnorm, max_iter)
    if resnorm > tol:
        raise NoPulseError(resnorm, max_iter)

    # A converged constant state is the trivial solution, not a pulse.
    if float(np.ptp(u[0])) < 1e-6:
        raise NoPulseError(resnorm, max_iter)

    dux = grid.deriv(u, 1)
    L = linearization_matrix(grid, model, u, c)
    psi, res_adj, _ = _adjoint_from_matrix(grid, L, dux)

    a_gap = np.nan
    eigenvalues = np.array([])
    zero_eig = 0.0
    cosine = np.nan
    if with_spectrum:
        eigenvalues = np.linalg.eigvals(L)
        near_zero = np.abs(eigenvalues) <= tol_eig
        others = eigenvalues[~near_zero]
        a_gap = -float(np.max(others.real)) if others.size else np.nan
        idx = np.argmin(np.abs(eigenvalues))
        zero_eig = eigenvalues[idx]
        zmode = _inverse_iteration(L, shift=0.0)
        dvec = dux.reshape(-1)
        cosine = abs(float(zmode @ dvec)) / (
            np.linalg.norm(zmode) * np.linalg.norm(dvec)
        )

    return PulseSolution(
        grid=grid,
        profile=u,
        speed=c,
        dprofile=dux,
        adjoint=psi,
        residual_bvp=resnorm,
        residual_adj=res_adj,
        a_gap=a_gap,
        eigenvalues=eigenvalues,
        zero_eigenvalue=zero_eig,
        zero_mode_cosine=cosine,
    )


def _inverse_iteration(A, shift=0.0, iters=6, rng_seed=7, deflate=None):
    """Inverse iteration for the eigenvector of A nearest `shift`."""
    m = A.shape[0]
    scale = np.linalg.norm(A, ord=1) / m
    lu = scipy.linalg.lu_factor(A - (shift + 1e-12 * scale) * np.eye(m))
    v = np.random.default_rng(rng_seed).standard_normal(m)
    for _ in range(iters):
        if deflate is not None:
            v -= (deflate @ v) / (deflate @ deflate) * deflate
        v = scipy.linalg.lu_solve(lu, v)
        v /= np.linalg.norm(v)
    if deflate is not None:
        v -= (deflate @ v) / (deflate @ deflate) * deflate
        v /= np.linalg.norm(v)
    return v


def _adjoint_from_matrix(grid, L, dux, sep_threshold=1e-6):
    """Nullvector of L^T scaled so that <psi, d_x u*> = -1."""
    psi_vec = _inverse_iteration(L.T)
    # crude estimate of the next-smallest singular direction, for separation
    w = _inverse_iteration(L.T, rng_seed=11, deflate=psi_vec)
    sep = np.linalg.norm(L.T @ w) / np.linalg.norm(w)
    if sep < sep_threshold:
        raise IllConditionedNullspaceError(
            f"adjoint nullspace separation {sep:.3e} below {sep_threshold:.1e}"
        )
    n, N = dux.shape
    psi = psi_vec.reshape(n, N)
    pairing = grid.inner(psi, dux)
    if abs(pairing) < 1e-14:
        raise IllConditionedNullspaceError("adjoint orthogonal to translation mode")
    psi = psi / (-pairing)
    res = np.linalg.norm(L.T @ psi.reshape(-1)) / np.linalg.norm(psi.reshape(-1))
    return psi, res, sep


def compute_adjoint(pulse, model, sep_threshold=1e-6):
    """Recompute the adjoint eigenfunction for an existing pulse solution."""
    L = linearization_matrix(pulse.grid, model, pulse.profile, pulse.speed)
    psi, res, _ = _adjoint_from_matrix(
        pulse.grid, L, pulse.dprofile, sep_threshold=sep_threshold
    )
    return psi, res
