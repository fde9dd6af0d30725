# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama kernels.

Direct transliteration of _pykernels.py; the operation order (trig
recurrences, accumulation order, update arithmetic) matches the pure-Python
reference exactly so the two backends agree bit-for-bit.
"""

from libc.math cimport cos, sin, floor

cdef double TWO_PI = 6.283185307179586476925286766559

DEF MAX_HARM = 128


cdef inline void _trig_table(double x, int mmax, double* C, double* S) nogil:
    cdef double theta = TWO_PI * x
    cdef double c1 = cos(theta)
    cdef double s1 = sin(theta)
    cdef int m
    C[0] = 1.0
    S[0] = 0.0
    if mmax >= 1:
        C[1] = c1
        S[1] = s1
    for m in range(2, mmax + 1):
        C[m] = C[m - 1] * c1 - S[m - 1] * s1
        S[m] = S[m - 1] * c1 + C[m - 1] * s1


cdef int _mmax(int ma, long[::1] harm) nogil:
    cdef int mmax = ma
    cdef Py_ssize_t j
    for j in range(harm.shape[0]):
        if harm[j] > mmax:
            mmax = <int> harm[j]
    return mmax


def em_chunk(double[::1] x, long[::1] wind, double[:, ::1] z,
             double dt, double c, double sigma,
             double amean, double[::1] acos, double[::1] asin,
             long[::1] harm, double[::1] bmean, double[::1] bcos,
             double[::1] bsin):
    cdef Py_ssize_t nsteps = z.shape[0]
    cdef Py_ssize_t nmodes = z.shape[1]
    cdef Py_ssize_t m_ens = x.shape[0]
    cdef int ma = <int> acos.shape[0]
    cdef int mmax = _mmax(ma, harm)
    if mmax >= MAX_HARM:
        raise ValueError("harmonic order too large for compiled kernel")
    cdef double C[MAX_HARM]
    cdef double S[MAX_HARM]
    cdef double sig2 = sigma * sigma
    cdef Py_ssize_t s, i, j
    cdef int m, h
    cdef double a, noise, bj, y, fl
    with nogil:
        for s in range(nsteps):
            for i in range(m_ens):
                _trig_table(x[i], mmax, C, S)
                a = amean
                for m in range(1, ma + 1):
                    a += acos[m - 1] * C[m] + asin[m - 1] * S[m]
                noise = 0.0
                for j in range(nmodes):
                    h = <int> harm[j]
                    bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                    noise += bj * z[s, j]
                y = x[i] + (c + sig2 * a) * dt + sigma * noise
                fl = floor(y)
                wind[i] += <long> fl
                x[i] = y - fl


def em_tangent_chunk(double[::1] x, double[::1] ell, long[::1] wind,
                     double[:, ::1] z, double dt, double c, double sigma,
                     double amean, double[::1] acos, double[::1] asin,
                     double[::1] dacos, double[::1] dasin,
                     long[::1] harm, double[::1] bmean, double[::1] bcos,
                     double[::1] bsin):
    cdef Py_ssize_t nsteps = z.shape[0]
    cdef Py_ssize_t nmodes = z.shape[1]
    cdef Py_ssize_t m_ens = x.shape[0]
    cdef int ma = <int> acos.shape[0]
    cdef int mmax = _mmax(ma, harm)
    if mmax >= MAX_HARM:
        raise ValueError("harmonic order too large for compiled kernel")
    cdef double C[MAX_HARM]
    cdef double S[MAX_HARM]
    cdef double sig2 = sigma * sigma
    cdef Py_ssize_t s, i, j
    cdef int m, h
    cdef double a, da, noise, dnoise, sum_bp2, bj, bpj, y, fl
    with nogil:
        for s in range(nsteps):
            for i in range(m_ens):
                _trig_table(x[i], mmax, C, S)
                a = amean
                da = 0.0
                for m in range(1, ma + 1):
                    a += acos[m - 1] * C[m] + asin[m - 1] * S[m]
                    da += dacos[m - 1] * C[m] + dasin[m - 1] * S[m]
                noise = 0.0
                dnoise = 0.0
                sum_bp2 = 0.0
                for j in range(nmodes):
                    h = <int> harm[j]
                    bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                    bpj = TWO_PI * h * (bsin[j] * C[h] - bcos[j] * S[h])
                    noise += bj * z[s, j]
                    dnoise += bpj * z[s, j]
                    sum_bp2 += bpj * bpj
                y = x[i] + (c + sig2 * a) * dt + sigma * noise
                fl = floor(y)
                wind[i] += <long> fl
                x[i] = y - fl
                ell[i] = ell[i] + sig2 * (da - 0.5 * sum_bp2) * dt + sigma * dnoise


def em_two_chunk(double[::1] xy, double[:, ::1] z, double dt, double c,
                 double sigma, double amean, double[::1] acos,
                 double[::1] asin, long[::1] harm, double[::1] bmean,
                 double[::1] bcos, double[::1] bsin, double threshold):
    cdef Py_ssize_t nsteps = z.shape[0]
    cdef Py_ssize_t nmodes = z.shape[1]
    cdef int ma = <int> acos.shape[0]
    cdef int mmax = _mmax(ma, harm)
    if mmax >= MAX_HARM:
        raise ValueError("harmonic order too large for compiled kernel")
    cdef double C[MAX_HARM]
    cdef double S[MAX_HARM]
    cdef double sig2 = sigma * sigma
    cdef Py_ssize_t s, i, j
    cdef int m, h
    cdef double a, noise, bj, diff, frac, dist, y
    cdef Py_ssize_t hit = -1
    with nogil:
        for s in range(nsteps):
            for i in range(2):
                _trig_table(xy[i], mmax, C, S)
                a = amean
                for m in range(1, ma + 1):
                    a += acos[m - 1] * C[m] + asin[m - 1] * S[m]
                noise = 0.0
                for j in range(nmodes):
                    h = <int> harm[j]
                    bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                    noise += bj * z[s, j]
                y = xy[i] + (c + sig2 * a) * dt + sigma * noise
                xy[i] = y - floor(y)
            diff = xy[0] - xy[1]
            frac = diff - floor(diff)
            dist = frac if frac <= 0.5 else 1.0 - frac
            if dist < threshold:
                hit = s
                break
    return hit
