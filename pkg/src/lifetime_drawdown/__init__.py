"""Minimum expected lifetime spent in drawdown under proportional consumption.

Closed-form dual solution, optimal and comparison investment strategies,
Monte Carlo estimation and numerical certificates.
"""

from __future__ import annotations

from .errors import ConfigError, DomainError, DrawdownError, NoBracket, ParamError
from .params import MarketParams, default_params, load_params, validate
from .policy import (
    ConstantFraction,
    DrawdownProbMin,
    OccupationMin,
    OptimalDrawdownTime,
    PolicyDiscontinuityWarning,
    PortfolioState,
    RuinMin,
    parse_strategy,
    policy_dispatch,
    policy_drawdown_prob,
    policy_occupation,
    policy_optimal,
    policy_ruin,
    value,
    value_at,
)
from .solver import DualFunction, FreeBoundaries, GammaRoots, compute_boundaries, compute_gammas, solve, solve_y1alpha

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstantFraction",
    "DomainError",
    "DrawdownError",
    "DrawdownProbMin",
    "DualFunction",
    "FreeBoundaries",
    "GammaRoots",
    "MarketParams",
    "NoBracket",
    "OccupationMin",
    "OptimalDrawdownTime",
    "ParamError",
    "PolicyDiscontinuityWarning",
    "PortfolioState",
    "RuinMin",
    "compute_boundaries",
    "compute_gammas",
    "default_params",
    "load_params",
    "parse_strategy",
    "policy_dispatch",
    "policy_drawdown_prob",
    "policy_occupation",
    "policy_optimal",
    "policy_ruin",
    "solve",
    "solve_y1alpha",
    "validate",
    "value",
    "value_at",
]
