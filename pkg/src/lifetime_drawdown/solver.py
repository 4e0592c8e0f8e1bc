"""Closed-form solution of the dual free-boundary problem and its Legendre inversion.

The dual value ``zeta_hat(y)`` lives on ``[y1, inf)`` and solves

    lam*zh = (kappa - r + lam)*y*zh_y + delta*y**2*zh_yy + 1{y >= y_alpha}

with smooth fit ``zh_y(y1) = 1``, ``zh_yy(y1) = 0``, ``zh_y(y_alpha) = alpha`` and
``zh -> 1/lam`` as ``y -> inf``.  Its Legendre transform
``zeta(z) = max_{y >= y1} (zh(y) - y*z)`` is the reduced value function of the
wealth-to-maximum ratio ``z = w/m``.

Below ``y_alpha`` everything is written in the log-ratio ``t = log(y/y1)`` so that
quantities vanishing at ``y1`` (``1 - zh_y``, ``zh_yy``) keep full relative
precision through ``expm1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from .errors import DomainError, DrawdownError
from .params import MarketParams
from .rootfind import bracketed_root

# log of the smallest normal double; y1alpha below it is not representable
LOG_X_MIN = math.log(2.2250738585072014e-308)


@dataclass(frozen=True)
class GammaRoots:
    """``delta`` and the roots ``gamma1 in (0,1)``, ``gamma2 < 0`` of
    ``delta*g**2 - (r - kappa - lam + delta)*g - lam = 0``."""

    delta: float
    gamma1: float
    gamma2: float


@dataclass(frozen=True)
class FreeBoundaries:
    y1alpha: float
    yalpha: float
    y1: float


def compute_gammas(p: MarketParams) -> GammaRoots:
    delta = p.delta
    b = p.r - p.kappa - p.lam + delta
    disc = math.sqrt(b * b + 4.0 * p.lam * delta)
    # Take the cancellation-free root first, recover the other from the product -lam/delta.
    if b >= 0:
        g1 = (b + disc) / (2.0 * delta)
        g2 = -p.lam / (delta * g1)
    else:
        g2 = (b - disc) / (2.0 * delta)
        g1 = -p.lam / (delta * g2)
    return GammaRoots(delta=delta, gamma1=g1, gamma2=g2)


def exp_diff(a: float, b: float, t):
    """``e^{a t} - e^{b t}`` for ``a > b`` and ``t >= 0`` without cancellation at either end of ``t``."""
    return -np.exp(a * t) * np.expm1((b - a) * t)


def _y1al_lhs(x: float, g1: float, g2: float) -> float:
    d = g1 - g2
    lx = math.log(x)
    return (1.0 - g2) / d * math.exp((1.0 - g1) * lx) - (1.0 - g1) / d * math.exp((1.0 - g2) * lx)


def solve_y1alpha(roots: GammaRoots, alpha: float) -> float:
    """Ratio ``y1/y_alpha`` in (0, 1) at which the inner branch has slope ``alpha``.

    The left side increases from 0 (at 0+) to 1 (at 1), so the root is bracketed
    for every ``alpha`` in (0, 1).  The search runs in ``u = log x``: when
    ``gamma1`` is close to 1 the root can be many decades below 1.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)")
    g1, g2 = roots.gamma1, roots.gamma2
    d = g1 - g2

    def f(u: float) -> float:
        return (1.0 - g2) / d * math.exp((1.0 - g1) * u) - (1.0 - g1) / d * math.exp((1.0 - g2) * u) - alpha

    lo = -1.0
    while f(lo) > 0 and lo > LOG_X_MIN:
        lo = max(2.0 * lo, LOG_X_MIN)
    u = bracketed_root(f, lo, 0.0, ftol=1e-16)
    return math.exp(u)


def compute_boundaries(roots: GammaRoots, y1alpha: float, p: MarketParams) -> FreeBoundaries:
    """Free boundaries from the ratio, with ``y_alpha`` fixed by continuity of ``zeta_hat``.

    Equating the two branches at ``y_alpha`` gives

        y_alpha = 1/lam * [ (1-g2)/(g1(g1-g2)) x**(1-g1)
                            - (1-g1)/(g2(g1-g2)) x**(1-g2) - alpha/g2 ]**-1,   x = y1alpha.
    """
    g1, g2 = roots.gamma1, roots.gamma2
    d = g1 - g2
    if not 0.0 < y1alpha <= 1.0:
        raise DomainError(f"y1alpha={y1alpha!r} outside (0, 1]")
    x = y1alpha
    lx = math.log(x)
    bracket = (
        (1.0 - g2) / (g1 * d) * math.exp((1.0 - g1) * lx)
        - (1.0 - g1) / (g2 * d) * math.exp((1.0 - g2) * lx)
        - p.alpha / g2
    )
    yalpha = 1.0 / (p.lam * bracket)
    if not (math.isfinite(yalpha) and yalpha > 0):
        raise DrawdownError(f"non-positive free boundary y_alpha={yalpha!r}")
    return FreeBoundaries(y1alpha=x, yalpha=yalpha, y1=yalpha * x)


@dataclass(frozen=True)
class DualFunction:
    """Fully determined dual solution; every evaluation is pure.

    Array arguments are accepted by the ``zeta_hat*`` family; the inversion
    helpers are scalar and have vectorised ``*_many`` counterparts.
    """

    params: MarketParams
    roots: GammaRoots
    boundaries: FreeBoundaries

    @classmethod
    def from_params(cls, p: MarketParams) -> "DualFunction":
        roots = compute_gammas(p)
        y1alpha = solve_y1alpha(roots, p.alpha)
        return cls(p, roots, compute_boundaries(roots, y1alpha, p))

    # -- constants ---------------------------------------------------------
    @cached_property
    def _c(self) -> dict[str, float]:
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        d = g1 - g2
        return {
            "A": (1.0 - g2) / d,
            "B": (1.0 - g1) / d,
            "C": (1.0 - g1) * (1.0 - g2) / d,
            "tmax": math.log(self.boundaries.yalpha / self.boundaries.y1),
        }

    # -- dual value and derivatives ---------------------------------------
    def _split(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)) or np.any(y < self.boundaries.y1):
            raise DomainError(f"zeta_hat defined for y >= y1={self.boundaries.y1!r}")
        inner = y < self.boundaries.yalpha
        t = np.log(np.where(inner, y, self.boundaries.y1) / self.boundaries.y1)
        v = np.where(inner, self.boundaries.yalpha, y) / self.boundaries.yalpha
        return y, inner, t, v

    @staticmethod
    def _out(x):
        return float(x) if np.ndim(x) == 0 else x

    def zeta_hat(self, y):
        y, inner, t, v = self._split(y)
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        b, lam, a = self.boundaries, self.params.lam, self.params.alpha
        d = g1 - g2
        with np.errstate(over="ignore"):
            left = b.y1 / d * ((1 - g2) / g1 * np.exp(g1 * t) - (1 - g1) / g2 * np.exp(g2 * t))
        right = 1.0 / lam + a * b.yalpha / g2 * v**g2
        return self._out(np.where(inner, left, right))

    def zeta_hat_y(self, y):
        y, inner, t, v = self._split(y)
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        c = self._c
        # A - B = 1, so A e^{at} - B e^{bt} = 1 + A expm1(at) - B expm1(bt)
        left = 1.0 + c["A"] * np.expm1((g1 - 1) * t) - c["B"] * np.expm1((g2 - 1) * t)
        right = self.params.alpha * v ** (g2 - 1)
        return self._out(np.where(inner, left, right))

    def zeta_hat_yy(self, y):
        y, inner, t, v = self._split(y)
        return self._out(np.where(inner, self._zhyy_left(t), self._zhyy_right(v)))

    def _zhyy_left(self, t):
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        # -C/y1 (e^{(g1-2)t} - e^{(g2-2)t}), with y1 folded into the exponent
        return self._c["C"] * np.exp((g1 - 2) * t - math.log(self.boundaries.y1)) * np.expm1((g2 - g1) * t)

    def _zhyy_right(self, v):
        g2 = self.roots.gamma2
        return -self.params.alpha * (1 - g2) / self.boundaries.yalpha * v ** (g2 - 2)

    def zeta_hat_branches(self, y: float) -> tuple[float, float, float, float, float, float]:
        """Both branch formulas (value, slope, curvature) at ``y``, left then right.

        Used for one-sided checks at ``y_alpha`` where the indicator switches.
        """
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        b, c = self.boundaries, self._c
        t = math.log(y / b.y1)
        v = y / b.yalpha
        d = g1 - g2
        lv = b.y1 / d * ((1 - g2) / g1 * math.exp(g1 * t) - (1 - g1) / g2 * math.exp(g2 * t))
        ls = 1.0 + c["A"] * math.expm1((g1 - 1) * t) - c["B"] * math.expm1((g2 - 1) * t)
        lc = float(self._zhyy_left(t))
        rv = 1.0 / self.params.lam + self.params.alpha * b.yalpha / g2 * v**g2
        rs = self.params.alpha * v ** (g2 - 1)
        rc = float(self._zhyy_right(v))
        return lv, ls, lc, rv, rs, rc

    # -- inversion ---------------------------------------------------------
    def log_ratio(self, z: float) -> float:
        """``t = log(y/y1)`` with ``zeta_hat_y(y) = z`` for ``z`` in ``[alpha, 1]``.

        Depends on the roots and ``alpha`` only, never on the level of ``y1``.
        """
        a = self.params.alpha
        if not a <= z <= 1.0:
            raise DomainError(f"log_ratio needs z in [alpha, 1], got {z!r}")
        if z == 1.0:
            return 0.0
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        A, B, tmax = self._c["A"], self._c["B"], self._c["tmax"]
        q = 1.0 - z

        def gap(t: float) -> float:
            # 1 - zeta_hat_y(y1*e^t) - (1 - z), cancellation-free near t = 0
            return -A * math.expm1((g1 - 1) * t) + B * math.expm1((g2 - 1) * t) - q

        if z == a:
            return tmax
        return bracketed_root(gap, 0.0, tmax, ftol=1e-16)

    def invert_dual(self, z: float) -> float:
        """Dual point ``y >= y1`` with ``zeta_hat_y(y) = z``; ``z = 0`` maps to ``inf``."""
        z = float(z)
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"z={z!r} outside [0, 1]")
        a, g2, b = self.params.alpha, self.roots.gamma2, self.boundaries
        if z == 0.0:
            return math.inf
        if z <= a:
            return b.yalpha * math.exp(math.log(z / a) / (g2 - 1.0))
        return b.y1 * math.exp(self.log_ratio(z))

    def invert_dual_many(self, z) -> np.ndarray:
        return np.array([self.invert_dual(v) for v in np.ravel(z)]).reshape(np.shape(z))

    # -- primal (Legendre) value and derivatives ----------------------------
    def zeta(self, z: float) -> float:
        """Reduced value ``zeta(z) = max_{y>=y1} (zeta_hat(y) - y z)``."""
        z = float(z)
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"z={z!r} outside [0, 1]")
        p, (g1, g2), b = self.params, (self.roots.gamma1, self.roots.gamma2), self.boundaries
        if z <= p.alpha:
            if z == 0.0:
                return 1.0 / p.lam
            return 1.0 / p.lam + (1 - g2) / g2 * p.alpha * b.yalpha * (z / p.alpha) ** (-g2 / (1 - g2))
        t = self.log_ratio(z)
        return b.y1 * self._c["C"] * (math.exp(g1 * t) / g1 - math.exp(g2 * t) / g2)

    def zeta_z(self, z: float) -> float:
        return -self.invert_dual(z)

    def zeta_zz(self, z: float) -> float:
        """``-1/zeta_hat_yy(y(z))``; ``+inf`` at ``z = 1`` where the dual curvature vanishes."""
        y = self.invert_dual(z)
        if math.isinf(y):
            return 0.0
        c = float(self.zeta_hat_yy(y))
        return math.inf if c == 0.0 else -1.0 / c

    # -- diagnostics -------------------------------------------------------
    def residuals(self) -> dict[str, float]:
        b, a = self.boundaries, self.params.alpha
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        lv, ls, _, rv, rs, _ = self.zeta_hat_branches(b.yalpha)
        return {
            "y1alpha_equation": _y1al_lhs(b.y1alpha, g1, g2) - a,
            "continuity_rel": (lv - rv) / abs(rv),
            "slope_at_y1_minus_1": float(self.zeta_hat_y(b.y1)) - 1.0,
            "curvature_at_y1": float(self.zeta_hat_yy(b.y1)),
            "slope_at_yalpha_left_minus_alpha": ls - a,
            "slope_at_yalpha_right_minus_alpha": rs - a,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "roots": {"delta": self.roots.delta, "gamma1": self.roots.gamma1, "gamma2": self.roots.gamma2},
            "boundaries": {
                "y1alpha": self.boundaries.y1alpha,
                "yalpha": self.boundaries.yalpha,
                "y1": self.boundaries.y1,
            },
            "residuals": self.residuals(),
        }


def solve(p: MarketParams) -> DualFunction:
    return DualFunction.from_params(p)
