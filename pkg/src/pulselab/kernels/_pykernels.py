"""Pure-Python Euler-Maruyama kernels (reference backend).

These loops are the executable definition of the stepping scheme; the
compiled backend is a direct transliteration and must produce bit-identical
results (trigonometric recurrences and accumulation order are mirrored
exactly).  Coefficients arrive as flat tables:

    amean, acos[m-1], asin[m-1]    drift series a(x), harmonics 1..Ma
    dacos, dasin                   its analytic derivative a'(x)
    harm[j], bmean[j], bcos[j], bsin[j]
                                   per-mode diffusion b_j(x) = bmean
                                   + bcos cos(2 pi harm x)
                                   + bsin sin(2 pi harm x)

z rows hold the per-step increments for all modes, already scaled to
variance dt (and carrying any amplitude/rotation transform of the path).
"""

import math

TWO_PI = 2.0 * math.pi


def _trig_table(x, mmax, C, S):
    theta = TWO_PI * x
    c1 = math.cos(theta)
    s1 = math.sin(theta)
    C[0] = 1.0
    S[0] = 0.0
    if mmax >= 1:
        C[1] = c1
        S[1] = s1
    for m in range(2, mmax + 1):
        C[m] = C[m - 1] * c1 - S[m - 1] * s1
        S[m] = S[m - 1] * c1 + C[m - 1] * s1


def em_chunk(x, wind, z, dt, c, sigma, amean, acos, asin, harm, bmean, bcos, bsin):
    """Advance wrapped positions x in [0, 1) and integer windings (in place).

    Keeping the state wrapped makes the update a bitwise function of the
    torus position alone, so restarting from a recorded position reproduces
    the continuation of the original run exactly (cocycle property).  The
    lift is wind + x.
    """
    nsteps, nmodes = z.shape
    m_ens = x.shape[0]
    ma = acos.shape[0]
    mmax = ma
    for j in range(nmodes):
        if harm[j] > mmax:
            mmax = harm[j]
    C = [0.0] * (mmax + 1)
    S = [0.0] * (mmax + 1)
    sig2 = sigma * sigma
    for s in range(nsteps):
        for i in range(m_ens):
            _trig_table(x[i], mmax, C, S)
            a = amean
            for m in range(1, ma + 1):
                a += acos[m - 1] * C[m] + asin[m - 1] * S[m]
            noise = 0.0
            for j in range(nmodes):
                h = harm[j]
                bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                noise += bj * z[s, j]
            y = x[i] + (c + sig2 * a) * dt + sigma * noise
            fl = math.floor(y)
            wind[i] += int(fl)
            x[i] = y - fl


def em_tangent_chunk(
    x, ell, wind, z, dt, c, sigma, amean, acos, asin, dacos, dasin, harm, bmean, bcos, bsin
):
    """Advance wrapped positions x, tangent log-derivatives ell, and integer
    windings (all in place)."""
    nsteps, nmodes = z.shape
    m_ens = x.shape[0]
    ma = acos.shape[0]
    mmax = ma
    for j in range(nmodes):
        if harm[j] > mmax:
            mmax = harm[j]
    C = [0.0] * (mmax + 1)
    S = [0.0] * (mmax + 1)
    sig2 = sigma * sigma
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
                h = harm[j]
                bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                bpj = TWO_PI * h * (bsin[j] * C[h] - bcos[j] * S[h])
                noise += bj * z[s, j]
                dnoise += bpj * z[s, j]
                sum_bp2 += bpj * bpj
            y = x[i] + (c + sig2 * a) * dt + sigma * noise
            fl = math.floor(y)
            wind[i] += int(fl)
            x[i] = y - fl
            ell[i] = ell[i] + sig2 * (da - 0.5 * sum_bp2) * dt + sigma * dnoise


def em_two_chunk(
    xy, z, dt, c, sigma, amean, acos, asin, harm, bmean, bcos, bsin, threshold
):
    """Advance the two wrapped positions in xy; return the in-chunk step index
    (0-based) after which their unit-torus distance first drops below
    threshold, or -1.
    """
    nsteps, nmodes = z.shape
    ma = acos.shape[0]
    mmax = ma
    for j in range(nmodes):
        if harm[j] > mmax:
            mmax = harm[j]
    C = [0.0] * (mmax + 1)
    S = [0.0] * (mmax + 1)
    sig2 = sigma * sigma
    for s in range(nsteps):
        for i in range(2):
            _trig_table(xy[i], mmax, C, S)
            a = amean
            for m in range(1, ma + 1):
                a += acos[m - 1] * C[m] + asin[m - 1] * S[m]
            noise = 0.0
            for j in range(nmodes):
                h = harm[j]
                bj = bmean[j] + bcos[j] * C[h] + bsin[j] * S[h]
                noise += bj * z[s, j]
            y = xy[i] + (c + sig2 * a) * dt + sigma * noise
            xy[i] = y - math.floor(y)
        diff = xy[0] - xy[1]
        frac = diff - math.floor(diff)
        dist = frac if frac <= 0.5 else 1.0 - frac
        if dist < threshold:
            return s
    return -1
