"""Benchmark the compiled Euler-Maruyama kernels against the pure-Python
reference backend, and verify they agree bit-for-bit.

Run:  python3 benchmarks/bench_kernels.py [nsteps]
"""

import sys
import time

import numpy as np

from pulselab.kernels import get_backend
from pulselab.noise import homogeneous_noise
from pulselab.reduction import PairingSet, build_a, build_b, ReducedModel
from pulselab.rng import gaussians
from pulselab.sde import CoeffTables


def synthetic_reduced_model(K=2):
    """Representative coefficient tables without running the PDE stack."""
    noise = homogeneous_noise(K=K)
    rng = np.random.default_rng(7)
    c = {k: v for k, v in zip(range(-K, K + 1), rng.normal(0.0, 0.3, 2 * K + 1))}
    c[0] = 1.5
    d = {j: 0.0 for k in range(K + 1) for j in (2 * k, -2 * k)}
    Q = {}
    for i in range(-K, K + 1):
        for j in range(i, K + 1):
            Q[(i, j)] = float(rng.normal(0.0, 0.5))
    pairings = PairingSet(K=K, c=c, d=d, Q=Q)
    a = build_a(noise, pairings)
    b = build_b(noise, pairings)
    return ReducedModel(speed=0.1, noise=noise, a=a, da=a.derivative(),
                        b=b, db={k: s.derivative() for k, s in b.items()},
                        pairings=pairings)


def run(kern, tables, z, dt, sigma):
    x = np.array([0.2])
    ell = np.array([0.0])
    wind = np.zeros(1, dtype=np.int64)
    t0 = time.perf_counter()
    kern.em_tangent_chunk(x, ell, wind, z, dt, tables.c, sigma,
                          *tables.tangent_args())
    return time.perf_counter() - t0, wind[0] + x[0], ell[0]


def main():
    nsteps = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    reduced = synthetic_reduced_model()
    tables = CoeffTables(reduced)
    dt, sigma = 1e-3, 0.1
    z = gaussians(11, range(2 * reduced.K + 1), 0, nsteps) * np.sqrt(dt)

    results = {}
    for name in ("python", "cython"):
        try:
            kern = get_backend(name)
        except ImportError:
            print(f"{name:>7}: unavailable")
            continue
        elapsed, x, ell = run(kern, tables, z, dt, sigma)
        results[name] = (elapsed, x, ell)
        print(f"{name:>7}: {elapsed:8.3f} s   "
              f"{1e9 * elapsed / nsteps:8.1f} ns/step   "
              f"x={x:.17g} ell={ell:.17g}")

    if len(results) == 2:
        (ep, xp, lp), (ec, xc, lc) = results["python"], results["cython"]
        print(f"speedup: {ep / ec:.1f}x")
        print(f"bit-exact: {xp == xc and lp == lc}")


if __name__ == "__main__":
    main()
