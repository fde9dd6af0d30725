"""Assembly of the phase-reduced SDE coefficients as exact trig series.

The reduced phase equation on the unit torus is (Ito form)

    d gamma = c dt + sigma^2 a(gamma) dt + sigma sum_k b_k(gamma) d beta_k,

with 1-periodic coefficients a, b_k built from three ingredients computed on
the pulse: Fourier pairings c_k = <psi g(u*), e_k>, pairings d_j of
psi (g'g)(u*) against e_j, and the second-variation matrix
Q_ij = pi''(u*)[g(u*) e_i, g(u*) e_j].  Translating the basis through the
pairing turns every coefficient into a finite trigonometric polynomial:

    b_k(x)  = alpha_k ( c_k cos(2 pi k x) - c_{-k} sin(2 pi k x) )   (k > 0)
    b_{-k}(x) = alpha_{-k} ( c_k sin(2 pi k x) + c_{-k} cos(2 pi k x) )
    b_0     = alpha_0 c_0

    a(x)    = 1/2 sum_{|k|<=K} alpha_k^2 [ <psi (g'g)(u*), T_{-x} e_k^2>
                                          + pi''(u*)[g(u*) T_{-x} e_k]^2 ],

where e_k^2 and (T_{-x} e_k)^2 expand over e_0, e_{+-2k} by double-angle
identities, leaving harmonics 0 and 2k only.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, LeftBasinError
from .noise import NoiseSpec, basis_function, mode_order
from .phase import default_relax_time, isochron_map, second_variation
from .trig import TrigSeries

SQRT2 = np.sqrt(2.0)


@dataclass
class PairingSet:
    """Fourier pairings of the adjoint with the noise basis.

    c[k] for |k| <= K; d[j] for j in {0} U {+-2k}; Q[(i, j)] for i, j in
    {k, -k} per mode pair, plus (0, 0).
    """

    K: int
    c: dict
    d: dict
    Q: dict = field(default_factory=dict)

    def q(self, i, j):
        if (i, j) in self.Q:
            return self.Q[(i, j)]
        return self.Q[(j, i)]

    def validate(self):
        for name, table in (("c", self.c), ("d", self.d), ("Q", self.Q)):
            for key, val in table.items():
                if not np.isfinite(val):
                    raise ValueError(f"non-finite pairing {name}[{key}] = {val}")
        for (i, j) in list(self.Q):
            if (j, i) in self.Q:
                if self.Q[(i, j)] != self.Q[(j, i)]:
                    raise ValueError(f"Q[{i},{j}] != Q[{j},{i}]")


def fourier_pairings(pulse, model, K):
    """Pairings c_k and d_j by trapezoidal quadrature on the pulse grid."""
    if K < 1:
        raise ValueError("K must be >= 1")
    grid = pulse.grid
    x = grid.x
    gu = model.g(pulse.profile)
    gdg = model.gdg(pulse.profile)
    w_c = np.sum(pulse.adjoint * gu, axis=0)     # psi . g(u*)
    w_d = np.sum(pulse.adjoint * gdg, axis=0)    # psi . g'(u*) g(u*)
    c = {}
    for k in range(-K, K + 1):
        c[k] = grid.h * float(np.sum(w_c * basis_function(k, x)))
    d = {0: grid.h * float(np.sum(w_d))}
    for k in range(1, K + 1):
        for j in (2 * k, -2 * k):
            d[j] = grid.h * float(np.sum(w_d * basis_function(j, x)))
    return PairingSet(K=K, c=c, d=d)


def q_matrix(pulse, model, K, eps=1e-3, t_relax=None, dt=0.02, verbose=False):
    """Second-variation pairings Q_ij = pi''(u*)[g(u*)e_i, g(u*)e_j].

    Computes the 2x2 block {k, -k} for each 1 <= k <= K plus Q_00 by
    polarization calls to second_variation; each entry costs a handful of
    isochron-map relaxations.
    """
    grid = pulse.grid
    x = grid.x
    gu = model.g(pulse.profile)
    if t_relax is None:
        t_relax = default_relax_time(pulse)
    # baseline phase of the unperturbed pulse, shared by every polarization call
    pi_base = isochron_map(pulse.profile, pulse, model, t_relax, dt=dt, near=0.0)

    def direction(k):
        return gu * basis_function(k, x)[None, :]

    def entry(i, j):
        vi, vj = direction(i), direction(j)
        ni, nj = grid.norm(vi), grid.norm(vj)
        if ni < 1e-14 or nj < 1e-14:
            return 0.0
        try:
            val = second_variation(
                pulse,
                model,
                vi / ni,
                vj / nj,
                eps=eps,
                t_relax=t_relax,
                dt=dt,
                pi_base=pi_base,
            )
        except LeftBasinError as exc:
            raise LeftBasinError(f"q_matrix mode pair ({i},{j}): {exc}") from exc
        if verbose:
            print(f"Q[{i},{j}] = {val * ni * nj:.6e}")
        return val * ni * nj

    Q = {(0, 0): entry(0, 0)}
    for k in range(1, K + 1):
        Q[(k, k)] = entry(k, k)
        Q[(-k, -k)] = entry(-k, -k)
        Q[(k, -k)] = entry(k, -k)
        Q[(-k, k)] = Q[(k, -k)]
    return Q


def build_b(noise, pairings):
    """Per-mode diffusion coefficients b_k as TrigSeries, in mode order."""
    series = {}
    c = pairings.c
    series[0] = TrigSeries(noise[0] * c[0])
    for k in range(1, noise.K + 1):
        ck, cmk = c[k], c[-k]
        cos = np.zeros(k)
        sin = np.zeros(k)
        cos[k - 1] = ck
        sin[k - 1] = -cmk
        series[k] = TrigSeries(0.0, noise[k] * cos, noise[k] * sin)
        cos2 = np.zeros(k)
        sin2 = np.zeros(k)
        cos2[k - 1] = cmk
        sin2[k - 1] = ck
        series[-k] = TrigSeries(0.0, noise[-k] * cos2, noise[-k] * sin2)
    return series


def build_a(noise, pairings):
    """Ito drift coefficient a(x) as a TrigSeries of order <= 2K."""
    d = pairings.d
    q = pairings.q
    K = noise.K
    mean = 0.5 * noise[0] ** 2 * (d[0] + q(0, 0))
    cos = np.zeros(2 * K)
    sin = np.zeros(2 * K)
    for m in range(1, K + 1):
        ap2 = noise[m] ** 2
        am2 = noise[-m] ** 2
        mean += 0.5 * (ap2 + am2) * (d[0] + 0.5 * (q(m, m) + q(-m, -m)))
        diff = 0.5 * (ap2 - am2)
        cos[2 * m - 1] = diff * (d[2 * m] / SQRT2 + 0.5 * (q(m, m) - q(-m, -m)))
        sin[2 * m - 1] = -diff * (d[-2 * m] / SQRT2 + q(m, -m))
    return TrigSeries(mean, cos, sin).truncated()


def strat_drift(reduced):
    """Stratonovich drift a - 1/2 sum_k b_k' b_k as an exact TrigSeries."""
    out = reduced.a
    for k in reduced.b:
        out = out - 0.5 * (reduced.db[k] * reduced.b[k])
    return out.truncated(tol=1e-300)


@dataclass
class NondegeneracyReport:
    passed: bool
    reasons: list
    c1_sq_sum: float
    threshold: float
    min_b1_sq: float


def nondegeneracy_check(noise, pairings, pulse=None, model=None, samples=4096):
    """Guard for the reduced model: alpha_{+-1} != 0 and c_1^2 + c_{-1}^2 > 0.

    The threshold is scale-invariant: 1e-12 times the squared norm of the
    paired scalar field psi . g(u*) when the pulse is supplied, else 1e-12
    times max(1, c_0^2).
    """
    reasons = []
    if noise[1] == 0.0:
        reasons.append("alpha_1 = 0")
    if noise[-1] == 0.0:
        reasons.append("alpha_-1 = 0")
    c1sq = pairings.c[1] ** 2 + pairings.c[-1] ** 2
    if pulse is not None and model is not None:
        w = np.sum(pulse.adjoint * model.g(pulse.profile), axis=0)
        scale = pulse.grid.h * float(np.sum(w * w))
    else:
        scale = max(1.0, pairings.c[0] ** 2)
    threshold = 1e-12 * scale
    if c1sq <= threshold:
        reasons.append(f"c_1^2 + c_-1^2 = {c1sq:.3e} <= threshold {threshold:.3e}")
    b = build_b(noise, pairings)
    xs = np.arange(samples) / samples
    min_b1 = float(np.min(b[1](xs) ** 2 + b[-1](xs) ** 2))
    return NondegeneracyReport(
        passed=not reasons,
        reasons=reasons,
        c1_sq_sum=c1sq,
        threshold=threshold,
        min_b1_sq=min_b1,
    )


@dataclass
class ReducedModel:
    """Phase-reduced SDE coefficients on the unit torus.

    b and db map mode index k (|k| <= K) to TrigSeries; a/da are the Ito
    drift coefficient and its derivative; strat_correction is
    -1/2 sum_k b_k' b_k, so the Stratonovich drift is a + strat_correction.
    """

    speed: float
    noise: NoiseSpec
    a: TrigSeries
    da: TrigSeries
    b: dict
    db: dict
    pairings: PairingSet

    @property
    def K(self):
        return self.noise.K

    def modes(self):
        return mode_order(self.K)

    def strat_correction(self):
        out = TrigSeries(0.0)
        for k in self.b:
            out = out - 0.5 * (self.db[k] * self.b[k])
        return out

    def diffusion_sq(self):
        """B(x) = sum_k b_k(x)^2 as an exact TrigSeries."""
        out = TrigSeries(0.0)
        for k in self.b:
            out = out + self.b[k] * self.b[k]
        return out

    def validate(self):
        if self.db[0].order != 0 or self.db[0].mean != 0.0:
            raise ValueError("b_0 must be constant")
        xs = np.arange(4096) / 4096.0
        m = np.min(self.b[1](xs) ** 2 + self.b[-1](xs) ** 2)
        if not m > 0:
            raise ValueError("b_1^2 + b_-1^2 vanishes somewhere on the torus")

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "speed": self.speed,
            "sigma": self.noise.sigma,
            "K": self.K,
            "alpha": {str(k): self.noise[k] for k in self.modes()},
            "c": {str(k): v for k, v in self.pairings.c.items()},
            "d": {str(j): v for j, v in self.pairings.d.items()},
            "Q": {f"{i},{j}": v for (i, j), v in self.pairings.Q.items()},
            "a": self.a.to_dict(),
            "b": {str(k): s.to_dict() for k, s in self.b.items()},
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @staticmethod
    def from_dict(doc):
        K = int(doc["K"])
        alpha = np.zeros(2 * K + 1)
        for key, val in doc["alpha"].items():
            alpha[K + int(key)] = val
        noise = NoiseSpec(K=K, alpha=alpha, sigma=doc["sigma"])
        pairings = PairingSet(
            K=K,
            c={int(k): v for k, v in doc["c"].items()},
            d={int(j): v for j, v in doc["d"].items()},
            Q={
                tuple(int(t) for t in key.split(",")): v
                for key, v in doc["Q"].items()
            },
        )
        a = TrigSeries.from_dict(doc["a"])
        b = {int(k): TrigSeries.from_dict(s) for k, s in doc["b"].items()}
        db = {k: s.derivative() for k, s in b.items()}
        return ReducedModel(
            speed=doc["speed"],
            noise=noise,
            a=a,
            da=a.derivative(),
            b=b,
            db=db,
            pairings=pairings,
        )

    @staticmethod
    def load(path):
        with open(path) as fh:
            return ReducedModel.from_dict(json.load(fh))


def build_reduced_model(pulse, model, noise, Q=None, **q_kwargs):
    """Full assembly: pairings, Q matrix (unless given), coefficients, checks."""
    pairings = fourier_pairings(pulse, model, noise.K)
    pairings.Q = Q if Q is not None else q_matrix(pulse, model, noise.K, **q_kwargs)
    pairings.validate()
    report = nondegeneracy_check(noise, pairings, pulse, model)
    if not report.passed:
        raise ConfigError("noise", "; ".join(report.reasons))
    a = build_a(noise, pairings)
    b = build_b(noise, pairings)
    reduced = ReducedModel(
        speed=pulse.speed,
        noise=noise,
        a=a,
        da=a.derivative(),
        b=b,
        db={k: s.derivative() for k, s in b.items()},
        pairings=pairings,
    )
    reduced.validate()
    return reduced
