"""Monte Carlo estimates of expected lifetime spent in drawdown.

Wealth follows the Euler-Maruyama discretisation of

    dW = [-(kappa - r) W + (mu - r) pi] dt + sigma pi dB

with the strategy and the drawdown indicator evaluated at the start of each
step, the running maximum updated after it, and absorption at the first
non-positive wealth.

Strategies that switch volatility at a wealth level (the optimal strategy at
``alpha m``, the occupation minimiser at its fixed level) make plain Euler
biased by O(sqrt(dt)): a step started near the level uses one side's
volatility for the whole step.  ``Scheme.INTERFACE`` (the default) replaces the
diffusive part of steps that start within a few standard deviations of the
level by an exact draw of Brownian motion with piecewise-constant volatility
frozen at the level, which removes that leading error term.  Away from the
level both schemes take identical Euler steps.  ``Scheme.EULER`` keeps plain
left-endpoint Euler throughout.

Two estimators of ``E[X_tau]`` are available.  Because the lifetime ``tau`` is
Exp(lam) and independent of the market,

    E[X_tau] = x0 + E int_0^inf e^{-lam s} 1{W_s <= alpha M_s} ds,

so ``DISCOUNTED`` integrates the discounted indicator over a truncated horizon
and needs no lifetime draw, while ``KILLED`` samples the death time directly.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

import numba
import numpy as np

from . import _kernel
from .errors import ConfigError
from .params import MarketParams
from .policy import (
    ConstantFraction,
    DrawdownProbMin,
    OccupationMin,
    OptimalDrawdownTime,
    PolicyDiscontinuityWarning,
    PortfolioState,
    RuinMin,
    StrategyKind,
    optimal_right_limit,
    policy_dispatch,
    strategy_label,
)
from .rng import standard_normals, stream_key
from .solver import DualFunction, exp_diff

TABLE_SIZE = 1 << 16
MIN_HORIZON_RATES = 20.0
CSV_HEADER = ("strategy", "mean", "std_err", "n_paths", "frac_absorbed", "frac_max_increased")


class Estimator(str, enum.Enum):
    DISCOUNTED = "discounted"
    KILLED = "killed"


class Scheme(str, enum.Enum):
    EULER = "euler"
    INTERFACE = "interface"


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``horizon`` only applies to the discounted estimator; ``None`` selects
    ``max(20/lam, 50)`` years.
    """

    initial: PortfolioState
    dt: float = 1e-3
    n_paths: int = 200_000
    seed: int = 0
    estimator: Estimator = Estimator.DISCOUNTED
    horizon: float | None = None
    scheme: Scheme = Scheme.INTERFACE

    def resolved_horizon(self, lam: float) -> float:
        return self.horizon if self.horizon is not None else max(MIN_HORIZON_RATES / lam, 50.0)

    def check(self, p: MarketParams) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt={self.dt} must be positive")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError(f"n_paths={self.n_paths} must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed={self.seed} must fit in an unsigned 64-bit integer")
        if self.estimator is Estimator.DISCOUNTED:
            T = self.resolved_horizon(p.lam)
            # truncation error is at most exp(-lam T)/lam
            if not (math.isfinite(T) and T * p.lam >= MIN_HORIZON_RATES):
                raise ConfigError(f"horizon={T} too short: need horizon*lam >= {MIN_HORIZON_RATES}")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SimConfig":
        allowed = {"dt", "n_paths", "seed", "estimator", "horizon", "initial", "scheme"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        try:
            init = raw.get("initial", {"w": 1.0, "m": 1.0, "x": 0.0})
            kw = dict(raw)
            kw["initial"] = PortfolioState(float(init["w"]), float(init["m"]), float(init.get("x", 0.0)))
            if "estimator" in kw:
                kw["estimator"] = Estimator(kw["estimator"])
            if "scheme" in kw:
                kw["scheme"] = Scheme(kw["scheme"])
            return cls(**kw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "SimConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["estimator"] = self.estimator.value
        d["scheme"] = self.scheme.value
        return d


@dataclass
class SimEstimate:
    strategy: str
    mean: float
    std_err: float
    n_paths: int
    frac_absorbed: float
    frac_max_increased: float
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def row(self) -> tuple:
        return (self.strategy, self.mean, self.std_err, self.n_paths, self.frac_absorbed, self.frac_max_increased)

    def to_dict(self) -> dict[str, Any]:
        return dict(zip(CSV_HEADER, self.row()))


@dataclass
class Comparison:
    """Per-strategy estimates plus pairwise differences on common random numbers."""

    estimates: list[SimEstimate]
    # (strategy_a, strategy_b, mean(a - b), std_err(a - b))
    differences: list[tuple[str, str, float, float]]

    def difference(self, a: str, b: str) -> tuple[float, float]:
        for sa, sb, diff, se in self.differences:
            if (sa, sb) == (a, b):
                return diff, se
            if (sa, sb) == (b, a):
                return -diff, se
        raise KeyError((a, b))


# -- single step reference ---------------------------------------------------
def step(state: PortfolioState, pi: float, dW: float, dt: float, p: MarketParams) -> PortfolioState:
    """One Euler-Maruyama step with left-endpoint drawdown clock and absorption at 0."""
    w, m, x = state.w, state.m, state.x
    if w <= p.alpha * m:
        x += dt
    if w <= 0.0:
        return PortfolioState(0.0, m, x)
    w_new = w + (-(p.kappa - p.r) * w + (p.mu - p.r) * pi) * dt + p.sigma * pi * dW
    if not math.isfinite(w_new):
        raise FloatingPointError(f"non-finite wealth after step from {state!r}")
    if w_new <= 0.0:
        return PortfolioState(0.0, m, x)
    return PortfolioState(w_new, max(m, w_new), x)


# -- kernel plumbing -----------------------------------------------------------
@lru_cache(maxsize=16)
def optimal_policy_table(d: DualFunction, size: int = TABLE_SIZE) -> tuple[np.ndarray, float]:
    """Optimal holdings per unit of maximum wealth on a uniform grid in ``s = sqrt(1 - z)``.

    In ``s`` the upper branch is smooth down to ``z = 1`` (it vanishes like
    ``sqrt(1 - z)`` in ``z``), so linear interpolation is accurate to ~1e-11.
    Returns ``(values, 1/h)``.
    """
    a = d.params.alpha
    g1, g2 = d.roots.gamma1, d.roots.gamma2
    A, B = (1 - g2) / (g1 - g2), (1 - g1) / (g1 - g2)
    C = (1 - g1) * (1 - g2) / (g1 - g2)
    smax = math.sqrt(1.0 - a)
    s = np.linspace(0.0, smax, size + 1)
    q = s * s
    lo = np.zeros_like(s)
    hi = np.full_like(s, math.log(d.boundaries.yalpha / d.boundaries.y1))
    # Vectorised bisection on 1 - zeta_hat_y(y1 e^t) = q; monotone increasing in t.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gap = -A * np.expm1((g1 - 1) * mid) + B * np.expm1((g2 - 1) * mid) - q
        below = gap < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(hi, 1e-300)):
            break
    t = 0.5 * (lo + hi)
    t[0] = 0.0
    t[-1] = math.log(d.boundaries.yalpha / d.boundaries.y1)
    values = d.params.risk_ratio * C * exp_diff(g1 - 1, g2 - 1, t)
    return values, size / smax


def _strategy_args(kind: StrategyKind, d: DualFunction) -> tuple[int, float, float, float]:
    p, roots = d.params, d.roots
    lo = p.risk_ratio * (1 - roots.gamma2)
    hi = p.risk_ratio * (1 - roots.gamma1)
    if isinstance(kind, OptimalDrawdownTime):
        return _kernel.OPTIMAL, lo, hi, 0.0
    if isinstance(kind, RuinMin):
        return _kernel.PROPORTIONAL, 0.0, hi, 0.0
    if isinstance(kind, ConstantFraction):
        return _kernel.PROPORTIONAL, 0.0, kind.theta, 0.0
    if isinstance(kind, OccupationMin):
        return _kernel.OCCUPATION, lo, hi, p.alpha * kind.fixed_m
    if isinstance(kind, DrawdownProbMin):
        raise ConfigError("the drawdown-probability strategy is undefined below alpha*m and cannot be simulated")
    raise ConfigError(f"unsupported strategy {kind!r}")


def _apply_thread_cap() -> None:
    cap = os.environ.get("DRAWDOWN_THREADS")
    if cap:
        try:
            n = int(cap)
        except ValueError as exc:
            raise ConfigError(f"DRAWDOWN_THREADS={cap!r} is not an integer") from exc
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def max_threshold(cfg: SimConfig, p: MarketParams) -> float:
    """Running-maximum level above which a path counts as having raised its maximum."""
    return cfg.initial.m * (1.0 + 10.0 * p.sigma * math.sqrt(cfg.dt))


def simulate_samples(cfg: SimConfig, kind: StrategyKind, d: DualFunction) -> tuple[np.ndarray, np.ndarray]:
    """Raw per-path estimates and flag bytes (bit 0 absorbed, bit 1 maximum increased)."""
    p = d.params
    cfg.check(p)
    code, lo, hi, level = _strategy_args(kind, d)
    table, inv_h = optimal_policy_table(d)
    n_steps = 0
    if cfg.estimator is Estimator.DISCOUNTED:
        n_steps = int(math.ceil(cfg.resolved_horizon(p.lam) / cfg.dt - 1e-9))
    _apply_thread_cap()
    s = cfg.initial
    return _kernel.simulate_paths(
        np.uint64(cfg.seed), int(cfg.n_paths), float(s.w), float(s.m), float(s.x),
        p.alpha, p.kappa - p.r, p.mu - p.r, p.sigma, p.lam, float(cfg.dt), n_steps,
        _kernel.DISCOUNTED if cfg.estimator is Estimator.DISCOUNTED else _kernel.KILLED,
        code, lo, hi, level, table, inv_h, max_threshold(cfg, p),
        _kernel.INTERFACE if cfg.scheme is Scheme.INTERFACE else _kernel.EULER,
    )


def _summarise(label: str, values: np.ndarray, flags: np.ndarray, keep: bool) -> SimEstimate:
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SimEstimate(
        strategy=label,
        mean=mean,
        std_err=se,
        n_paths=n,
        frac_absorbed=float(np.count_nonzero(flags & _kernel.ABSORBED) / n),
        frac_max_increased=float(np.count_nonzero(flags & _kernel.MAX_INCREASED) / n),
        samples=values if keep else None,
    )


def run(cfg: SimConfig, kind: StrategyKind, d: DualFunction, *, keep_samples: bool = False) -> SimEstimate:
    """Estimate expected lifetime spent in drawdown under ``kind``."""
    values, flags = simulate_samples(cfg, kind, d)
    return _summarise(strategy_label(kind), values, flags, keep_samples)


def compare(cfg: SimConfig, kinds: Sequence[StrategyKind], d: DualFunction) -> Comparison:
    """Run several strategies on identical Brownian paths and report paired differences."""
    if len(kinds) < 2:
        raise ConfigError("compare needs at least two strategies")
    labels = [strategy_label(k) for k in kinds]
    samples = []
    estimates = []
    for kind, label in zip(kinds, labels):
        values, flags = simulate_samples(cfg, kind, d)
        samples.append(values)
        estimates.append(_summarise(label, values, flags, keep=False))
    diffs = []
    for i in range(len(kinds)):
        for j in range(i + 1, len(kinds)):
            dv = samples[i] - samples[j]
            se = float(dv.std(ddof=1) / math.sqrt(dv.size)) if dv.size > 1 else 0.0
            diffs.append((labels[i], labels[j], float(dv.mean()), se))
    return Comparison(estimates, diffs)


def _interface_level(kind: StrategyKind, d: DualFunction, m: float) -> tuple[float, float, float] | None:
    """``(level, sigma pi(level-), sigma pi(level+))`` for strategies that switch at a level."""
    p = d.params
    lo = p.risk_ratio * (1 - d.roots.gamma2)
    hi = p.risk_ratio * (1 - d.roots.gamma1)
    if isinstance(kind, OptimalDrawdownTime):
        lev = p.alpha * m
        return lev, p.sigma * lo * lev, p.sigma * optimal_right_limit(d, m)
    if isinstance(kind, OccupationMin):
        lev = p.alpha * kind.fixed_m
        return lev, p.sigma * lo * lev, p.sigma * hi * lev
    return None


def reference_path(cfg: SimConfig, kind: StrategyKind, d: DualFunction, path: int, n_steps: int) -> list[PortfolioState]:
    """Pure-Python trajectory of one path using the exact strategy.

    Consumes the same random streams as the compiled kernel; meant for testing.
    """
    p = d.params
    z = standard_normals(np.uint64(cfg.seed), path, n_steps)
    base, gamma = stream_key(np.uint64(cfg.seed), path)
    dt = cfg.dt
    sq = math.sqrt(dt)
    states = [cfg.initial]
    s = cfg.initial
    for k in range(n_steps):
        if s.w <= 0.0:
            break
        if isinstance(kind, OccupationMin) and s.w == p.alpha * kind.fixed_m:
            pi = p.risk_ratio * (1 - d.roots.gamma1) * s.w
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PolicyDiscontinuityWarning)
                pi = policy_dispatch(kind, d, s.w, s.m)
        iface = _interface_level(kind, d, s.m) if cfg.scheme is Scheme.INTERFACE else None
        w1 = s.w + (-(p.kappa - p.r) * s.w + (p.mu - p.r) * pi) * dt
        a = 0.0
        if iface is not None:
            lev, s_lo, s_hi = iface
            a = p.sigma * pi
            if (w1 >= lev) != (s.w >= lev):
                a = s_hi if w1 >= lev else s_lo
        if a > 0.0 and abs(w1 - lev) < _kernel.BAND_SD * a * sq:
            u = float(_kernel.step_uniform(np.uint64(base), np.uint64(gamma), k))
            w_new = lev + float(_kernel.interface_step(w1 - lev, a, s_lo, s_hi, sq, dt, z[k], u))
            x = s.x + dt if s.w <= p.alpha * s.m else s.x
            s = PortfolioState(0.0, s.m, x) if w_new <= 0.0 else PortfolioState(w_new, max(s.m, w_new), x)
        else:
            s = step(s, pi, z[k] * sq, dt, p)
        states.append(s)
    return states


# -- output --------------------------------------------------------------------
def write_csv(estimates: Sequence[SimEstimate], out: io.TextIOBase | None = None) -> str:
    """CSV table with a fixed header; floats use ``repr`` so output is locale-free."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for e in estimates:
        wr.writerow([e.strategy, repr(e.mean), repr(e.std_err), e.n_paths, repr(e.frac_absorbed), repr(e.frac_max_increased)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


__all__ = [
    "Comparison",
    "Estimator",
    "SimConfig",
    "SimEstimate",
    "compare",
    "optimal_policy_table",
    "reference_path",
    "run",
    "simulate_samples",
    "step",
    "write_csv",
]
