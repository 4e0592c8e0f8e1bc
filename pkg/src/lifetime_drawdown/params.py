"""Market and preference constants.

All rates are annual (``r``, ``mu``, ``kappa``, ``lam`` per year, ``sigma`` per
square-root year).  Units are documented, not enforced.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    AlphaOutOfRange,
    KappaNotAboveR,
    LamNotPositive,
    MissingKey,
    MuNotAboveR,
    NonFiniteParam,
    RNotPositive,
    SigmaNotPositive,
    UnknownKey,
)

PARAM_KEYS = ("r", "mu", "sigma", "kappa", "lam", "alpha")


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market with proportional consumption and exponential lifetime.

    Attributes
    ----------
    r : riskless rate, > 0
    mu : risky drift, > r
    sigma : risky volatility, > 0
    kappa : proportional consumption rate, > r
    lam : mortality hazard rate, > 0
    alpha : drawdown proportion, in (0, 1)
    """

    r: float
    mu: float
    sigma: float
    kappa: float
    lam: float
    alpha: float

    def __post_init__(self) -> None:
        _check(self)

    @property
    def delta(self) -> float:
        """Half the squared Sharpe ratio."""
        return 0.5 * ((self.mu - self.r) / self.sigma) ** 2

    @property
    def risk_ratio(self) -> float:
        """(mu - r) / sigma**2, the Merton-type scale common to every strategy."""
        return (self.mu - self.r) / self.sigma**2

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def replace(self, **changes: float) -> "MarketParams":
        d = self.to_dict()
        d.update(changes)
        return validate(d)


def _check(p: MarketParams) -> None:
    # Order fixes which error wins when several constraints fail at once.
    for f in fields(p):
        v = getattr(p, f.name)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise NonFiniteParam(f"{f.name}={v!r} is not a finite number")
    if not p.r > 0:
        raise RNotPositive(f"r={p.r} must be > 0")
    if not p.mu > p.r:
        raise MuNotAboveR(f"mu={p.mu} must exceed r={p.r}")
    if not p.sigma > 0:
        raise SigmaNotPositive(f"sigma={p.sigma} must be > 0")
    if not p.kappa > p.r:
        raise KappaNotAboveR(f"kappa={p.kappa} must exceed r={p.r}")
    if not p.lam > 0:
        raise LamNotPositive(f"lam={p.lam} must be > 0")
    if not 0 < p.alpha < 1:
        raise AlphaOutOfRange(f"alpha={p.alpha} must lie in (0, 1)")


def validate(raw: Mapping[str, Any] | MarketParams) -> MarketParams:
    """Return a validated :class:`MarketParams` or raise the matching ``ParamError``.

    ``raw`` must carry exactly the six keys ``r, mu, sigma, kappa, lam, alpha``.
    Validating an already-valid object returns an equal object.
    """
    if isinstance(raw, MarketParams):
        return MarketParams(**raw.to_dict())
    unknown = sorted(set(raw) - set(PARAM_KEYS))
    if unknown:
        raise UnknownKey(f"unknown parameter key(s): {', '.join(unknown)}")
    missing = [k for k in PARAM_KEYS if k not in raw]
    if missing:
        raise MissingKey(f"missing parameter key(s): {', '.join(missing)}")
    values = {}
    for k in PARAM_KEYS:
        v = raw[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise NonFiniteParam(f"{k}={v!r} is not a number")
        values[k] = float(v)
    return MarketParams(**values)


def load_params(path: str | Path) -> MarketParams:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise NonFiniteParam("parameter document must be a JSON object")
    return validate(raw)


def default_params() -> MarketParams:
    """Illustrative parameter set shipped with the package (not calibrated)."""
    text = resources.files("lifetime_drawdown").joinpath("data/default_params.json").read_text()
    return validate(json.loads(text))
