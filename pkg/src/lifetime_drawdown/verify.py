"""Numerical certificates for the closed-form solution.

Each ``check_*`` function returns one or more :class:`CheckResult`.  A result is either
a *residual* (passes when ``value <= tolerance``) or a *margin* (passes when
``value > tolerance``).  :func:`full_report` assembles them in a fixed order;
new checks are appended, existing names never change.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DrawdownError
from .params import MarketParams
from .policy import (
    OptimalDrawdownTime,
    PortfolioState,
    optimal_left_limit,
    optimal_right_limit,
    policy_drawdown_prob,
    policy_occupation,
    policy_optimal,
    policy_ruin,
    value,
)
from .solver import DualFunction, _y1al_lhs, compute_gammas

RESIDUAL = "residual"
MARGIN = "margin"

TOL_IDENTITY = 1e-8
TOL_FBP = 1e-9
TOL_SMOOTH = 1e-10
TOL_LEGENDRE = 1e-5
TOL_EQUAL = 1e-12
WINDOW = 1e-4


@dataclass
class CheckResult:
    name: str
    kind: str
    value: float
    tolerance: float
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def residual(cls, name: str, value: float, tolerance: float, **detail: Any) -> "CheckResult":
        ok = bool(math.isfinite(value) and value <= tolerance)
        return cls(name, RESIDUAL, float(value), tolerance, ok, detail)

    @classmethod
    def margin(cls, name: str, value: float, tolerance: float, **detail: Any) -> "CheckResult":
        ok = bool(math.isfinite(value) and value > tolerance)
        return cls(name, MARGIN, float(value), tolerance, ok, detail)


@dataclass
class VerificationReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def to_json(self, **kw: Any) -> str:
        return json.dumps(self.to_dict(), indent=kw.pop("indent", 2), default=_jsonable, **kw)


def _jsonable(o: Any) -> Any:
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


# -- grids -------------------------------------------------------------------
def z_grid(alpha: float, n: int = 500, window: float = WINDOW) -> np.ndarray:
    """``n`` points in (0, 1) avoiding relative windows around ``alpha`` and 1."""
    z = np.linspace(0.0, 1.0, n + 2)[1:-1]
    keep = (np.abs(z - alpha) > window * alpha) & (z < 1.0 - window)
    z = z[keep]
    # top up to exactly n points inside the admissible set
    extra = np.linspace(window, 1.0 - 2 * window, n)
    extra = extra[(np.abs(extra - alpha) > window * alpha)]
    return np.sort(np.concatenate([z, extra[: n - z.size]]))


def y_grid(d: DualFunction, n: int = 500, upper: float = 50.0, window: float = WINDOW) -> np.ndarray:
    b = d.boundaries
    y = np.geomspace(b.y1 * (1 + 1e-6), upper * b.yalpha, n)
    return y[np.abs(y / b.yalpha - 1.0) > window]


# -- individual checks -------------------------------------------------------
def check_roots(params: Sequence[MarketParams]) -> CheckResult:
    """Vieta identities and sign facts for every parameter set."""
    worst = 0.0
    signs = True
    for p in params:
        g = compute_gammas(p)
        prod = -p.lam / g.delta
        tot = (p.r - p.kappa - p.lam + g.delta) / g.delta
        worst = max(worst, abs(g.gamma1 * g.gamma2 - prod) / abs(prod))
        worst = max(worst, abs(g.gamma1 + g.gamma2 - tot) / max(abs(tot), abs(g.gamma1), abs(g.gamma2)))
        signs &= 0 < g.gamma1 < 1 and g.gamma2 < 0
    return CheckResult.residual("roots_vieta", worst if signs else math.inf, 1e-12, n_sets=len(params), signs_ok=signs)


def check_free_boundaries(d: DualFunction) -> list[CheckResult]:
    b, a = d.boundaries, d.params.alpha
    g1, g2 = d.roots.gamma1, d.roots.gamma2
    lv, ls, _, rv, rs, _ = d.zeta_hat_branches(b.yalpha)
    order_ok = 0 < b.y1 < b.yalpha and 0 < b.y1alpha < 1
    return [
        CheckResult.residual("y1alpha_equation", abs(_y1al_lhs(b.y1alpha, g1, g2) - a), 1e-12),
        CheckResult.residual("continuity_at_yalpha", abs(lv - rv) / abs(rv) if order_ok else math.inf, TOL_SMOOTH),
        CheckResult.residual("smooth_fit_slope_y1", abs(float(d.zeta_hat_y(b.y1)) - 1.0), TOL_SMOOTH),
        CheckResult.residual("smooth_fit_curvature_y1", abs(float(d.zeta_hat_yy(b.y1))), TOL_SMOOTH),
        CheckResult.residual("slope_at_yalpha", max(abs(ls - a), abs(rs - a)), TOL_SMOOTH),
    ]


def fbp_residual(d: DualFunction, y: np.ndarray) -> np.ndarray:
    p, delta = d.params, d.roots.delta
    zh, zy, zyy = d.zeta_hat(y), d.zeta_hat_y(y), d.zeta_hat_yy(y)
    ind = (y >= d.boundaries.yalpha).astype(float)
    return p.lam * zh + (p.r - p.kappa - p.lam) * y * zy - delta * y**2 * zyy - ind


def check_fbp(d: DualFunction, y: np.ndarray | None = None) -> CheckResult:
    """Dual ODE residual, plus sign of slope and curvature, on a log grid."""
    y = y_grid(d) if y is None else y
    res = float(np.max(np.abs(fbp_residual(d, y))))
    shape_ok = bool(np.all(d.zeta_hat_y(y) > 0) and np.all(d.zeta_hat_yy(y[y > d.boundaries.y1 * (1 + 1e-9)]) < 0))
    return CheckResult.residual("fbp_residual", res if shape_ok else math.inf, TOL_FBP, n=int(y.size), shape_ok=shape_ok)


def primal_derivatives(d: DualFunction, z: float) -> tuple[float, float, float]:
    """``(zeta, zeta_z, zeta_zz)`` through the dual relations ``zeta_z = -y``, ``zeta_zz = -1/zeta_hat_yy(y)``."""
    return d.zeta(z), d.zeta_z(z), d.zeta_zz(z)


def bvp_residual(d: DualFunction, z: float) -> float:
    p, delta = d.params, d.roots.delta
    f, fz, fzz = primal_derivatives(d, z)
    ind = 1.0 if z <= p.alpha else 0.0
    return p.lam * f + (p.kappa - p.r) * z * fz + delta * fz * fz / fzz - ind


def check_bvp(d: DualFunction, z: np.ndarray | None = None) -> list[CheckResult]:
    """Reduced boundary-value problem: ODE residual, value at 0, curvature blow-up at 1."""
    p = d.params
    z = z_grid(p.alpha) if z is None else z
    res = max(abs(bvp_residual(d, float(v))) for v in z)
    # zeta(z) - 1/lam decays like z**(-g2/(1-g2)); check the value at 0 and the decay rate
    g2 = d.roots.gamma2
    rate = -g2 / (1 - g2)
    e1, e2 = abs(d.zeta(1e-8) - 1 / p.lam), abs(d.zeta(1e-10) - 1 / p.lam)
    rate_err = abs(math.log(e1 / e2) / math.log(100.0) - rate)
    curv_far = d.zeta_zz(0.5)
    ratios = [d.zeta_zz(1 - eps) / curv_far for eps in (1e-4, 1e-6, 1e-8, 1e-10)]
    return [
        CheckResult.residual("bvp_residual", res, TOL_IDENTITY, n=int(len(z))),
        CheckResult.residual("zeta_at_zero", abs(d.zeta(0.0) - 1 / p.lam), TOL_SMOOTH),
        CheckResult.residual("zeta_decay_rate_at_zero", rate_err, 1e-6, expected=rate),
        CheckResult.margin(
            "zeta_zz_blowup_at_one",
            min(ratios[i + 1] / ratios[i] for i in range(len(ratios) - 1)),
            1.0,
            ratios=ratios,
        ),
    ]


def check_legendre(d: DualFunction, z: np.ndarray | None = None, n_y: int = 10_000) -> list[CheckResult]:
    """Brute-force grid maximum of ``zeta_hat(y) - y z`` against the implicit ``zeta``."""
    b, a = d.boundaries, d.params.alpha
    z = np.linspace(0.01, 1.0, 100) if z is None else np.asarray(z)
    y = np.geomspace(b.y1, 1e3 * b.yalpha, n_y)
    zh = d.zeta_hat(y)
    obj = zh[None, :] - y[None, :] * z[:, None]
    grid_max = obj.max(axis=1)
    exact = np.array([d.zeta(float(v)) for v in z])
    err = float(np.max(np.abs(grid_max - exact)))
    at_one = int(np.argmax(zh - y))
    at_alpha = int(np.argmax(zh - y * a))
    cell = int(np.searchsorted(y, b.yalpha))
    return [
        CheckResult.residual("legendre_grid_max", err, TOL_LEGENDRE, n_z=int(z.size), n_y=n_y),
        CheckResult.residual("legendre_argmax_z1", float(at_one), 0.0),
        CheckResult.residual("legendre_argmax_alpha_cells", float(abs(at_alpha - cell)), 1.0),
    ]


def hamiltonian(d: DualFunction, z: float, pi: float, m: float = 1.0) -> float:
    """Generator applied to ``phi(w, m) = zeta(w/m)`` at ``w = z m`` with holding ``pi``."""
    p = d.params
    f, fz, fzz = primal_derivatives(d, z)
    w = z * m
    ind = 1.0 if z <= p.alpha else 0.0
    return (-(p.kappa - p.r) * w + (p.mu - p.r) * pi) * fz / m + 0.5 * p.sigma**2 * pi * pi * fzz / m**2 - p.lam * f + ind


def check_hjb_minimizer(d: DualFunction, z: np.ndarray | None = None, n_perturb: int = 21) -> list[CheckResult]:
    """Perturbed holdings never push the generator below zero; the feedback holding minimises it."""
    z = np.linspace(0.01, 0.99, 100) if z is None else np.asarray(z)
    z = z[np.abs(z - d.params.alpha) > WINDOW * d.params.alpha]
    factors = np.linspace(0.5, 1.5, n_perturb)
    centre = n_perturb // 2
    worst_low = math.inf
    argmin_ok = True
    at_opt = 0.0
    zero_ok = True
    double_low = math.inf
    double_err = 0.0
    for v in z:
        v = float(v)
        pstar = policy_optimal(d, v, 1.0)
        vals = [hamiltonian(d, v, pstar * f) for f in factors]
        worst_low = min(worst_low, min(vals))
        argmin_ok &= int(np.argmin(vals)) == centre
        at_opt = max(at_opt, abs(vals[centre]))
        zero_ok &= hamiltonian(d, v, 0.0) >= -TOL_IDENTITY
        # quadratic in the holding, so L(2 pi*) = L(pi*) + delta zeta_z^2 / zeta_zz
        _, fz, fzz = primal_derivatives(d, v)
        gap = d.roots.delta * fz * fz / fzz
        l2 = hamiltonian(d, v, 2 * pstar)
        double_low = min(double_low, l2)
        double_err = max(double_err, abs(l2 - gap))
    return [
        CheckResult.margin("hjb_lower_bound", worst_low, -TOL_IDENTITY, n_z=int(z.size), argmin_at_feedback=argmin_ok),
        CheckResult.residual("hjb_at_feedback", at_opt if argmin_ok and zero_ok else math.inf, TOL_IDENTITY),
        CheckResult.margin("hjb_double_holding_margin", double_low, 0.0, max_quadratic_error=double_err),
    ]


def check_orderings(d: DualFunction, ms: Sequence[float] = (0.5, 1.0, 2.0, 10.0, 250.0), n: int = 200) -> list[CheckResult]:
    """Strategy comparisons in and out of drawdown, and the jump at the drawdown level."""
    p, roots = d.params, d.roots
    a = p.alpha
    eq_err = 0.0
    below_margin = math.inf
    above_margin = math.inf
    occ_ruin = 0.0
    jump = math.inf
    half = n // 2
    for m in ms:
        lo = np.linspace(a * m * 1e-9, a * m * (1 - 1e-9), half)
        hi = np.linspace(a * m * (1 + 1e-9), m, n - half)
        for w in lo:
            w = float(w)
            ps, po, pr = policy_optimal(d, w, m), policy_occupation(p, roots, w, m), policy_ruin(p, roots, w)
            eq_err = max(eq_err, abs(ps - po) / abs(po))
            below_margin = min(below_margin, (ps - pr) / pr)
        for w in hi:
            w = float(w)
            ps, pd = policy_optimal(d, w, m), policy_drawdown_prob(d, w, m)
            po, pr = policy_occupation(p, roots, w, m), policy_ruin(p, roots, w)
            eq_err = max(eq_err, abs(ps - pd) / max(abs(pd), 1e-300))
            occ_ruin = max(occ_ruin, abs(po - pr) / abs(pr))
            above_margin = min(above_margin, (po - ps) / po)
        jump = min(jump, (optimal_left_limit(d, m) - optimal_right_limit(d, m)) / m)
    return [
        CheckResult.residual("optimal_equals_occupation_below", eq_err, TOL_EQUAL),
        CheckResult.margin("optimal_above_ruin_below", below_margin, TOL_EQUAL),
        CheckResult.residual("occupation_equals_ruin_above", occ_ruin, TOL_EQUAL),
        CheckResult.margin("optimal_below_occupation_above", above_margin, TOL_EQUAL),
        CheckResult.margin("jump_at_drawdown_level", jump, 0.0),
    ]


def check_feedback_form(d: DualFunction, z: np.ndarray | None = None) -> CheckResult:
    """Closed-form strategy against ``-(mu-r)/sigma^2 m zeta_z/zeta_zz`` from the dual relations."""
    z = z_grid(d.params.alpha, 200) if z is None else z
    worst = 0.0
    for v in z:
        v = float(v)
        _, fz, fzz = primal_derivatives(d, v)
        ref = -d.params.risk_ratio * fz / fzz
        worst = max(worst, abs(policy_optimal(d, v, 1.0) - ref) / abs(ref))
    return CheckResult.residual("feedback_form", worst, 1e-9, n=int(len(z)))


def check_simulation(d: DualFunction, n_paths: int, dt: float, seed: int, w: float = 0.5) -> CheckResult:
    """Discounted-occupancy estimate under the optimal strategy against the analytic value."""
    from .simulator import SimConfig, run

    init = PortfolioState(w, 1.0, 0.0)
    est = run(SimConfig(init, dt=dt, n_paths=n_paths, seed=seed), OptimalDrawdownTime(), d)
    target = value(d, init)
    z = abs(est.mean - target) / est.std_err if est.std_err > 0 else math.inf
    return CheckResult.residual(
        "simulation_vs_value", z, 3.0, mean=est.mean, std_err=est.std_err, analytic=target, n_paths=n_paths, dt=dt
    )


def random_params(n: int, seed: int = 0) -> list[MarketParams]:
    """Random valid parameter sets spanning a wide range of market conditions."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        r = rng.uniform(0.001, 0.08)
        out.append(
            MarketParams(
                r=r,
                mu=r + rng.uniform(0.005, 0.15),
                sigma=rng.uniform(0.05, 0.6),
                kappa=r + rng.uniform(0.001, 0.1),
                lam=rng.uniform(0.005, 0.5),
                alpha=rng.uniform(0.05, 0.95),
            )
        )
    return out


_BOUNDARY_NAMES = (
    "y1alpha_equation", "continuity_at_yalpha", "smooth_fit_slope_y1", "smooth_fit_curvature_y1", "slope_at_yalpha",
)
_BVP_NAMES = ("bvp_residual", "zeta_at_zero", "zeta_decay_rate_at_zero", "zeta_zz_blowup_at_one")
_LEGENDRE_NAMES = ("legendre_grid_max", "legendre_argmax_z1", "legendre_argmax_alpha_cells")
_HJB_NAMES = ("hjb_lower_bound", "hjb_at_feedback", "hjb_double_holding_margin")
_ORDERING_NAMES = (
    "optimal_equals_occupation_below", "optimal_above_ruin_below", "occupation_equals_ruin_above",
    "optimal_below_occupation_above", "jump_at_drawdown_level",
)


def _guarded(names: Sequence[str], fn: Callable[[], Any]) -> list[CheckResult]:
    """Run a check group; an exception fails every entry of the group under its usual name."""
    try:
        out = fn()
    except (DrawdownError, ArithmeticError, ValueError) as exc:
        err = f"{type(exc).__name__}: {exc}"
        return [CheckResult(n, RESIDUAL, math.inf, 0.0, False, {"error": err}) for n in names]
    return list(out) if isinstance(out, list) else [out]


def full_report(
    d: DualFunction,
    *,
    n_grid: int = 500,
    sim_paths: int = 2_000,
    sim_dt: float = 1e-3,
    seed: int = 0,
) -> VerificationReport:
    """Every analytic check, plus one Monte Carlo cross-check when ``sim_paths > 0``."""
    checks: list[CheckResult] = [check_roots([d.params, *random_params(50, seed)])]
    groups: list[tuple[tuple[str, ...], Callable[[], Any]]] = [
        (_BOUNDARY_NAMES, lambda: check_free_boundaries(d)),
        (("fbp_residual",), lambda: check_fbp(d, y_grid(d, n_grid))),
        (_BVP_NAMES, lambda: check_bvp(d, z_grid(d.params.alpha, n_grid))),
        (_LEGENDRE_NAMES, lambda: check_legendre(d)),
        (_HJB_NAMES, lambda: check_hjb_minimizer(d)),
        (_ORDERING_NAMES, lambda: check_orderings(d)),
        (("feedback_form",), lambda: check_feedback_form(d)),
    ]
    if sim_paths > 0:
        groups.append((("simulation_vs_value",), lambda: check_simulation(d, sim_paths, sim_dt, seed)))
    for names, fn in groups:
        checks += _guarded(names, fn)
    return VerificationReport(checks)
