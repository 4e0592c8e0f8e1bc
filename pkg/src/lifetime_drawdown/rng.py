"""Counter-based per-path random streams.

Draw ``k`` of path ``p`` under seed ``s`` is ``mix64(base_p + k * gamma_p)``,
where ``(base_p, gamma_p)`` is a hash of ``(s, p)`` and ``gamma_p`` is an odd
increment (the splittable SplitMix64 construction).  A path's draws never
depend on how many paths exist, on thread scheduling, or on the strategy being
simulated, which is what common-random-number comparisons rely on.

Normals come from a 256-layer ziggurat driven by the same stream.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np
from numba import float64, int64, uint64

_GOLDEN = 0x9E3779B97F4A7C15
_LIFE_SALT = 0xD1B54A32D192ED03
_GAMMA_SALT = 0x8CB92BA72F3D8DD7
_INV_2_53 = 1.0 / 9007199254740992.0

ZIG_R = 3.6541528853610088
_ZIG_AREA = 0.00492867323399


def _ziggurat_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dn = tn = ZIG_R
    q = _ZIG_AREA / math.exp(-0.5 * dn * dn)
    scale = 2.0**52
    ki = np.zeros(256, dtype=np.uint64)
    wi = np.zeros(256)
    fi = np.zeros(256)
    ki[0] = np.uint64((dn / q) * scale)
    wi[0] = q / scale
    wi[255] = dn / scale
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(_ZIG_AREA / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = np.uint64((dn / tn) * scale)
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / scale
    return ki, wi, fi


ZIG_K, ZIG_W, ZIG_F = _ziggurat_tables()


@nb.njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@nb.njit(cache=True)
def _popcount(x):
    n = 0
    while x:
        x &= x - uint64(1)
        n += 1
    return n


@nb.njit(cache=True)
def stream_key(seed, path):
    """``(base, gamma)`` for path ``path`` under ``seed``; injective in ``path``."""
    base = mix64(mix64(uint64(seed) + uint64(_GOLDEN)) ^ uint64(path))
    gamma = mix64(base ^ uint64(_GAMMA_SALT)) | uint64(1)
    # Sparse-bit increments make poor Weyl sequences.
    if _popcount(gamma ^ (gamma >> uint64(1))) < 24:
        gamma ^= uint64(0xAAAAAAAAAAAAAAAA)
    return base, gamma


@nb.njit(inline="always", cache=True)
def uniform_from(bits):
    """Double in [0, 1) from the top 53 bits."""
    return float64(int64(bits >> uint64(11))) * _INV_2_53


@nb.njit(cache=True)
def lifetime_uniform(base):
    """Uniform in (0, 1] from a stream disjoint from the Brownian draws."""
    return 1.0 - uniform_from(mix64(mix64(base ^ uint64(_LIFE_SALT))))


@nb.njit(cache=True)
def _ziggurat_tail(idx, x, base, gamma, ctr):
    # Rejection branch; returns |z| and the advanced counter.
    ki, wi, fi = ZIG_K, ZIG_W, ZIG_F
    while True:
        if idx == 0:
            while True:
                ctr += uint64(1)
                xx = -math.log1p(-uniform_from(mix64(base + ctr * gamma))) / ZIG_R
                ctr += uint64(1)
                yy = -math.log1p(-uniform_from(mix64(base + ctr * gamma)))
                if yy + yy > xx * xx:
                    return ZIG_R + xx, ctr
        else:
            ctr += uint64(1)
            u = uniform_from(mix64(base + ctr * gamma))
            if (fi[idx - 1] - fi[idx]) * u + fi[idx] < math.exp(-0.5 * x * x):
                return x, ctr
        ctr += uint64(1)
        r = mix64(base + ctr * gamma)
        idx = np.intp(r & uint64(0xFF))
        rabs = (r >> uint64(9)) & uint64(0x000FFFFFFFFFFFFF)
        x = float64(int64(rabs)) * wi[idx]
        if rabs < ki[idx]:
            return x, ctr


@nb.njit(inline="always", cache=True)
def draw_normal(base, gamma, ctr):
    """Standard normal and the advanced counter; one 64-bit draw on the fast path.

    The sign bit is taken from the first draw even when the tail is resampled.
    """
    ctr += uint64(1)
    r = mix64(base + ctr * gamma)
    idx = np.intp(r & uint64(0xFF))
    sign = (r >> uint64(8)) & uint64(1)
    rabs = (r >> uint64(9)) & uint64(0x000FFFFFFFFFFFFF)
    x = float64(int64(rabs)) * ZIG_W[idx]
    if rabs >= ZIG_K[idx]:
        x, ctr = _ziggurat_tail(idx, x, base, gamma, ctr)
    if sign:
        x = -x
    return x, ctr


@nb.njit(cache=True)
def standard_normals(seed, path, n):
    """The first ``n`` normals of a path's stream, as the simulator consumes them."""
    base, gamma = stream_key(seed, path)
    out = np.empty(n)
    ctr = uint64(0)
    for i in range(n):
        out[i], ctr = draw_normal(base, gamma, ctr)
    return out
