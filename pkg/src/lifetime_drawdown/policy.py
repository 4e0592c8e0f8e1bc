"""Value function and the four comparison investment strategies.

Every strategy returns the dollar amount held in the risky asset.  The common
factor ``(mu - r)/sigma**2`` is ``MarketParams.risk_ratio``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

from .errors import DomainError
from .params import MarketParams
from .solver import DualFunction, GammaRoots, exp_diff


class PolicyDiscontinuityWarning(UserWarning):
    """The optimal strategy was requested exactly at its jump ``w = alpha*m``."""


@dataclass(frozen=True)
class PortfolioState:
    """Wealth ``w``, running maximum ``m`` and accumulated drawdown time ``x``."""

    w: float
    m: float
    x: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.w) and math.isfinite(self.m) and math.isfinite(self.x)):
            raise DomainError(f"non-finite state {self!r}")
        if self.m <= 0 or self.w < 0 or self.w > self.m:
            raise DomainError(f"state needs 0 <= w <= m and m > 0, got w={self.w}, m={self.m}")
        if self.x < 0:
            raise DomainError(f"drawdown time x={self.x} must be >= 0")


# -- strategy kinds ---------------------------------------------------------
@dataclass(frozen=True)
class OptimalDrawdownTime:
    name = "optimal"


@dataclass(frozen=True)
class RuinMin:
    name = "ruin"


@dataclass(frozen=True)
class DrawdownProbMin:
    name = "ddprob"


@dataclass(frozen=True)
class OccupationMin:
    """Occupation-time minimiser for the fixed interval ``[0, alpha*fixed_m]``."""

    fixed_m: float
    name = "occupation"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.fixed_m) and self.fixed_m > 0):
            raise DomainError(f"fixed_m={self.fixed_m} must be positive")


@dataclass(frozen=True)
class ConstantFraction:
    """Benchmark baseline holding ``theta * w`` in the risky asset."""

    theta: float
    name = "const"

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise DomainError(f"theta={self.theta} must be finite")


StrategyKind = Union[OptimalDrawdownTime, RuinMin, DrawdownProbMin, OccupationMin, ConstantFraction]


def strategy_label(kind: StrategyKind) -> str:
    if isinstance(kind, ConstantFraction):
        return f"const:{kind.theta:g}"
    if isinstance(kind, OccupationMin):
        return f"occupation:{kind.fixed_m:g}"
    return kind.name


def parse_strategy(text: str, m: float = 1.0) -> StrategyKind:
    """Parse ``optimal|ruin|ddprob|occupation[:fixed_m]|const:<theta>``.

    ``occupation`` without a ceiling uses ``m``.
    """
    head, _, arg = text.partition(":")
    head = head.strip().lower()
    if head == "optimal" and not arg:
        return OptimalDrawdownTime()
    if head == "ruin" and not arg:
        return RuinMin()
    if head == "ddprob" and not arg:
        return DrawdownProbMin()
    if head == "occupation":
        return OccupationMin(float(arg) if arg else m)
    if head == "const" and arg:
        return ConstantFraction(float(arg))
    raise ValueError(f"unknown strategy {text!r}")


# -- value ------------------------------------------------------------------
def value(d: DualFunction, s: PortfolioState) -> float:
    """Minimum expected lifetime spent in drawdown, ``x + zeta(w/m)``."""
    return s.x + d.zeta(s.w / s.m)


def value_at(d: DualFunction, w: float, m: float, x: float = 0.0) -> float:
    return value(d, PortfolioState(w, m, x))


# -- strategies ---------------------------------------------------------------
def _check_wm(w: float, m: float) -> None:
    if not (math.isfinite(w) and math.isfinite(m)) or m <= 0 or w <= 0 or w > m:
        raise DomainError(f"need 0 < w <= m, got w={w}, m={m}")


def _upper_branch(d: DualFunction, z: float, m: float) -> float:
    # ((mu-r)/sigma^2) m C [(y/y1)^(g1-1) - (y/y1)^(g2-1)] with y/y1 = e^t
    g1, g2 = d.roots.gamma1, d.roots.gamma2
    t = d.log_ratio(z)
    c = (1 - g1) * (1 - g2) / (g1 - g2)
    return d.params.risk_ratio * m * c * float(exp_diff(g1 - 1, g2 - 1, t))


def policy_optimal(d: DualFunction, w: float, m: float) -> float:
    """Optimal amount in the risky asset for wealth ``w`` and maximum ``m``.

    At ``w == alpha*m`` the strategy jumps; the right limit is returned and a
    :class:`PolicyDiscontinuityWarning` is emitted.
    """
    _check_wm(w, m)
    p = d.params
    z = w / m
    if z < p.alpha:
        return p.risk_ratio * (1 - d.roots.gamma2) * w
    if z == p.alpha:
        warnings.warn(
            "optimal strategy is discontinuous at w = alpha*m; returning the right limit",
            PolicyDiscontinuityWarning,
            stacklevel=2,
        )
    return _upper_branch(d, z, m)


def optimal_left_limit(d: DualFunction, m: float) -> float:
    """Limit of the optimal strategy as ``w -> alpha*m`` from below."""
    return d.params.risk_ratio * (1 - d.roots.gamma2) * d.params.alpha * m


def optimal_right_limit(d: DualFunction, m: float) -> float:
    """Limit of the optimal strategy as ``w -> alpha*m`` from above."""
    if not m > 0:
        raise DomainError(f"m={m} must be positive")
    return _upper_branch(d, d.params.alpha, m)


def policy_ruin(p: MarketParams, roots: GammaRoots, w: float) -> float:
    """Probability-of-ruin minimiser; independent of the ruin level."""
    if not (math.isfinite(w) and w > 0):
        raise DomainError(f"w={w} must be positive")
    return p.risk_ratio * (1 - roots.gamma1) * w


def policy_drawdown_prob(d: DualFunction, w: float, m: float) -> float:
    """Probability-of-drawdown minimiser, defined above the drawdown level only."""
    _check_wm(w, m)
    if not w > d.params.alpha * m:
        raise DomainError(f"drawdown-probability strategy needs w > alpha*m, got w={w}, m={m}")
    return _upper_branch(d, w / m, m)


def policy_occupation(p: MarketParams, roots: GammaRoots, w: float, fixed_m: float) -> float:
    """Occupation-time minimiser for ``[0, alpha*fixed_m]`` with the ceiling held fixed."""
    if not (math.isfinite(w) and w > 0):
        raise DomainError(f"w={w} must be positive")
    level = p.alpha * fixed_m
    if w == level:
        raise DomainError("occupation strategy is undefined exactly at alpha*fixed_m")
    g = roots.gamma2 if w < level else roots.gamma1
    return p.risk_ratio * (1 - g) * w


def policy_dispatch(kind: StrategyKind, d: DualFunction, w: float, m: float) -> float:
    if isinstance(kind, OptimalDrawdownTime):
        return policy_optimal(d, w, m)
    if isinstance(kind, RuinMin):
        return policy_ruin(d.params, d.roots, w)
    if isinstance(kind, DrawdownProbMin):
        return policy_drawdown_prob(d, w, m)
    if isinstance(kind, OccupationMin):
        return policy_occupation(d.params, d.roots, w, kind.fixed_m)
    if isinstance(kind, ConstantFraction):
        return kind.theta * w
    raise TypeError(f"unsupported strategy {kind!r}")
