"""Counter-based Gaussian streams for reproducible shared-noise simulation.

Each draw is a pure function of (seed, stream, counter): a splitmix64-style
bit mix produces two uniforms that feed a Box-Muller transform, and both
Box-Muller outputs are used (counters are processed in aligned pairs), so any
slicing of a stream reproduces the same numbers bit-for-bit.  That exactness
is what makes the discrete cocycle property and step-shifted restarts hold
exactly rather than statistically.
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0x8F462907355F3C41)
_DRAW_SALT = np.uint64(0xD1B54A32D192ED03)


def _mix64(z):
    z = (z + _GOLDEN).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _uniform(bits):
    """Map uint64 to a double in (0, 1): top 53 bits, offset half an ulp."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def stream_bases(seed, streams):
    """Per-stream base states derived from (seed, stream index)."""
    streams = np.asarray(streams, dtype=np.uint64)
    seed_h = np.uint64((int(seed) * 0x9E3779B97F4A7C15) & _MASK)
    return _mix64(seed_h ^ (streams + np.uint64(1)) * _STREAM_SALT)


def gaussians(seed, streams, start, count):
    """Standard normals, shape (count, len(streams)).

    Row s corresponds to absolute counter start+s; column j to streams[j].
    Chunk boundaries do not affect the values: counters are consumed in
    aligned pairs (2c, 2c+1) and the requested window is sliced out.
    """
    start = int(start)
    base = stream_bases(seed, streams)
    p0 = start // 2
    p1 = (start + count + 1) // 2
    npairs = p1 - p0
    ctr = (np.uint64(p0) + np.arange(npairs, dtype=np.uint64))[:, None]
    state = base[None, :] + ctr * _GOLDEN
    u1 = _uniform(_mix64(state))
    u2 = _uniform(_mix64(state ^ _DRAW_SALT))
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = (2.0 * np.pi) * u2
    out = np.empty((2 * npairs, base.size))
    out[0::2] = rad * np.cos(ang)
    out[1::2] = rad * np.sin(ang)
    lo = start - 2 * p0
    return out[lo : lo + count]
