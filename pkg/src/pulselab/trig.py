"""Finite trigonometric series of period 1 with exact algebra.

A TrigSeries stores a mean value and cosine/sine coefficients for harmonics
1..M.  Sums, scalar multiples, derivatives, and products are computed exactly
on the coefficients (products by convolution of the complex coefficient
arrays), so structural identities can be asserted coefficient-wise instead of
on sampled values.
"""

import numpy as np


class TrigSeries:
    """f(x) = mean + sum_{m=1}^{M} cos_m cos(2 pi m x) + sin_m sin(2 pi m x)."""

    def __init__(self, mean=0.0, cos=(), sin=()):
        cos = np.atleast_1d(np.asarray(cos, dtype=float))
        sin = np.atleast_1d(np.asarray(sin, dtype=float))
        if cos.size == 0:
            cos = np.zeros(0)
        if sin.size == 0:
            sin = np.zeros(0)
        M = max(cos.size, sin.size)
        self.mean = float(mean)
        self.cos = np.zeros(M)
        self.sin = np.zeros(M)
        self.cos[: cos.size] = cos
        self.sin[: sin.size] = sin

    @property
    def order(self):
        return self.cos.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.mean)
        for m in range(1, self.order + 1):
            theta = 2.0 * np.pi * m * x
            out = out + self.cos[m - 1] * np.cos(theta) + self.sin[m - 1] * np.sin(theta)
        return out if out.shape else float(out)

    def derivative(self):
        m = np.arange(1, self.order + 1)
        return TrigSeries(
            0.0, cos=2.0 * np.pi * m * self.sin, sin=-2.0 * np.pi * m * self.cos
        )

    # -- exact algebra on coefficients ------------------------------------

    def _complex(self):
        """Coefficients c_m, m = -M..M, with f = sum c_m exp(2 pi i m x)."""
        M = self.order
        c = np.zeros(2 * M + 1, dtype=complex)
        c[M] = self.mean
        for m in range(1, M + 1):
            cm = 0.5 * (self.cos[m - 1] - 1j * self.sin[m - 1])
            c[M + m] = cm
            c[M - m] = np.conj(cm)
        return c

    @staticmethod
    def _from_complex(c):
        M = (c.size - 1) // 2
        mean = c[M].real
        cos = 2.0 * c[M + 1 :].real
        sin = -2.0 * c[M + 1 :].imag
        return TrigSeries(mean, cos, sin)

    def __add__(self, other):
        if np.isscalar(other):
            return TrigSeries(self.mean + other, self.cos, self.sin)
        M = max(self.order, other.order)
        a = np.zeros(M)
        b = np.zeros(M)
        a[: self.order] += self.cos
        a[: other.order] += other.cos
        b[: self.order] += self.sin
        b[: other.order] += other.sin
        return TrigSeries(self.mean + other.mean, a, b)

    __radd__ = __add__

    def __neg__(self):
        return TrigSeries(-self.mean, -self.cos, -self.sin)

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return TrigSeries(self.mean * other, self.cos * other, self.sin * other)
        prod = np.convolve(self._complex(), other._complex())
        return self._from_complex(prod)

    __rmul__ = __mul__

    def truncated(self, tol=0.0):
        """Drop trailing harmonics with |cos|, |sin| <= tol."""
        M = self.order
        while M > 0 and abs(self.cos[M - 1]) <= tol and abs(self.sin[M - 1]) <= tol:
            M -= 1
        return TrigSeries(self.mean, self.cos[:M], self.sin[:M])

    def max_abs(self, samples=4096):
        x = np.arange(samples) / samples
        return float(np.max(np.abs(self(x))))

    def min_value(self, samples=4096):
        x = np.arange(samples) / samples
        return float(np.min(self(x)))

    def harmonic_amplitudes(self):
        """Amplitude sqrt(cos_m^2 + sin_m^2) per harmonic m = 1..M."""
        return np.hypot(self.cos, self.sin)

    def __repr__(self):
        return f"TrigSeries(mean={self.mean:.6g}, order={self.order})"

    def to_dict(self):
        return {
            "mean": self.mean,
            "cos": self.cos.tolist(),
            "sin": self.sin.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return TrigSeries(d["mean"], d["cos"], d["sin"])


def trig_dot(series_list_a, series_list_b):
    """Exact TrigSeries for sum_k a_k(x) b_k(x)."""
    out = TrigSeries(0.0)
    for a, b in zip(series_list_a, series_list_b):
        out = out + a * b
    return out
