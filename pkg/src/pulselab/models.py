"""Reaction-diffusion system definitions.

A model is an n-component semilinear system

    du/dt = D u_xx + f(u),

optionally driven by multiplicative noise with shape g(u).  Reaction and
noise maps act pointwise; they receive and return arrays of shape (n, N).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ModelSpec:
    """Reaction-diffusion system with noise shape.

    f and g map (n, N) field samples to (n, N); their Jacobians return
    (n, n, N) arrays of pointwise partial derivatives.
    """

    ncomp: int
    diffusion: tuple  # per-component diffusion coefficients, D_i >= 0
    f: Callable
    f_jac: Callable
    g: Callable
    g_jac: Callable
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.diffusion) != self.ncomp:
            raise ValueError("one diffusion coefficient per component required")
        if any(d < 0 for d in self.diffusion):
            raise ValueError("diffusion coefficients must be nonnegative")
        if not any(d > 0 for d in self.diffusion):
            raise ValueError("at least one component must diffuse")

    def gdg(self, u):
        """Pointwise g'(u) g(u), the vector driving the Ito correction."""
        gu = self.g(u)
        jac = self.g_jac(u)
        return np.einsum("ijx,jx->ix", jac, gu)


def fhn_model(nu=0.05, a=0.1, eps=0.02, gamma=2.0, g=None, g_jac=None):
    """FitzHugh-Nagumo system with cubic kinetics.

        u_t = nu u_xx + u(u - a)(1 - u) - v
        v_t = eps (u - gamma v)

    Noise shape defaults to (1, 0): forcing acts on the u-component only.
    """
    if not (nu > 0 and 0 < a < 0.5 and eps > 0):
        raise ValueError("need nu > 0, 0 < a < 1/2, eps > 0")

    def f(U):
        u, v = U
        return np.stack([u * (u - a) * (1.0 - u) - v, eps * (u - gamma * v)])

    def f_jac(U):
        u, v = U
        one = np.ones_like(u)
        dfu = -3.0 * u * u + 2.0 * (1.0 + a) * u - a
        return np.array(
            [[dfu, -one], [eps * one, -eps * gamma * one]]
        )

    if g is None:

        def g(U):
            u, v = U
            return np.stack([np.ones_like(u), np.zeros_like(u)])

        def g_jac(U):
            u, v = U
            z = np.zeros_like(u)
            return np.array([[z, z], [z, z]])

    return ModelSpec(
        ncomp=2,
        diffusion=(nu, 0.0),
        f=f,
        f_jac=f_jac,
        g=g,
        g_jac=g_jac,
        params={"nu": nu, "a": a, "eps": eps, "gamma": gamma},
    )


def fhn_multiplicative(nu=0.05, a=0.1, eps=0.02, gamma=2.0):
    """FHN variant with state-dependent noise shape g = (u, 0)."""

    def g(U):
        u, v = U
        return np.stack([u, np.zeros_like(u)])

    def g_jac(U):
        u, v = U
        z = np.zeros_like(u)
        return np.array([[np.ones_like(u), z], [z, z]])

    return fhn_model(nu=nu, a=a, eps=eps, gamma=gamma, g=g, g_jac=g_jac)
