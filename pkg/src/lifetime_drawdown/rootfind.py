"""Bracketed scalar root finding: bisection safeguarded secant."""

from __future__ import annotations

import math
from typing import Callable

from .errors import NoBracket

MAX_ITER = 200


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    ftol: float = 1e-13,
    xtol_rel: float = 1e-15,
    maxiter: int = MAX_ITER,
) -> float:
    """Root of ``f`` on ``[lo, hi]`` given ``f(lo)`` and ``f(hi)`` of opposite sign.

    A secant step is taken whenever it lands strictly inside the current bracket
    and the previous step at least halved the bracket; otherwise the midpoint
    is used.  Stops at ``|f| < ftol`` or when the bracket is narrower than
    ``xtol_rel * max(|lo|, |hi|, 1e-300)``.

    Raises
    ------
    NoBracket
        If the endpoint values do not straddle zero.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (math.isfinite(flo) and math.isfinite(fhi)) or (flo > 0) == (fhi > 0):
        raise NoBracket(f"f({lo!r})={flo!r} and f({hi!r})={fhi!r} do not straddle zero")

    scale = max(abs(lo), abs(hi), 1e-300)
    width_prev = 2.0 * (hi - lo)
    best, fbest = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for _ in range(maxiter):
        width = hi - lo
        if width <= xtol_rel * scale:
            break
        x = 0.5 * (lo + hi)
        if width <= 0.5 * width_prev and fhi != flo:
            s = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < s < hi:
                x = s
        width_prev = width
        fx = f(x)
        if abs(fx) < abs(fbest):
            best, fbest = x, fx
        if abs(fx) < ftol:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
    return best
