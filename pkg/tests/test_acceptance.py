"""Acceptance criteria 1-10 at their stated tolerances.

Each test records one ``criterion k: PASS|FAIL`` line, printed in the pytest
terminal summary.  Criterion 7 runs 2 x 200k paths over a 500-year horizon at
dt = 1e-3 and takes tens of minutes on a single core.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE
from lifetime_drawdown import (
    ConstantFraction,
    OptimalDrawdownTime,
    PortfolioState,
    RuinMin,
    value_at,
)
from lifetime_drawdown.simulator import Estimator, SimConfig, compare, run
from lifetime_drawdown.verify import (
    check_bvp,
    check_fbp,
    check_free_boundaries,
    check_hjb_minimizer,
    check_legendre,
    check_orderings,
    check_roots,
    random_params,
    y_grid,
    z_grid,
)


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def test_criterion_1_root_identities():
    c = check_roots(random_params(50, seed=2024))
    record(1, c.passed, f"max relative Vieta residual {c.value:.3g} over 50 random sets (tol 1e-12), signs ok {c.detail['signs_ok']}")


def test_criterion_2_free_boundaries(dual):
    checks = check_free_boundaries(dual)
    tol = {"y1alpha_equation": 1e-12}
    ok = all(c.value < tol.get(c.name, 1e-10) for c in checks)
    record(2, ok, ", ".join(f"{c.name}={c.value:.3g}" for c in checks))


def test_criterion_3_residuals(dual):
    fbp = check_fbp(dual, y_grid(dual, 500))
    bvp = check_bvp(dual, z_grid(dual.params.alpha, 500))[0]
    ok = fbp.value < 1e-9 and bvp.value < 1e-8 and bvp.detail["n"] == 500
    record(3, ok, f"FBP residual {fbp.value:.3g} (tol 1e-9, {fbp.detail['n']} pts), BVP residual {bvp.value:.3g} (tol 1e-8, 500 pts)")


def test_criterion_4_legendre(dual):
    c = {r.name: r for r in check_legendre(dual)}
    g = c["legendre_grid_max"]
    ok = g.value < 1e-5 and g.detail["n_z"] == 100 and g.detail["n_y"] >= 10_000
    record(4, ok, f"max |grid max - zeta| {g.value:.3g} on {g.detail['n_z']} z x {g.detail['n_y']} y (tol 1e-5)")


def test_criterion_5_hjb(dual):
    low, at, _ = check_hjb_minimizer(dual, n_perturb=21)
    ok = low.value >= -1e-8 and low.detail["argmin_at_feedback"] and at.passed and low.detail["n_z"] == 100
    record(5, ok, f"min L {low.value:.3g} (>= -1e-8), |L at feedback| {at.value:.3g}, argmin at feedback {low.detail['argmin_at_feedback']}")


def test_criterion_6_orderings(dual):
    checks = check_orderings(dual, ms=(0.5, 1.0, 2.0, 10.0, 250.0), n=200)
    ok = all(c.passed for c in checks)
    record(6, ok, ", ".join(f"{c.name}={c.value:.3g}" for c in checks))


@pytest.mark.slow
def test_criterion_7_monte_carlo(dual):
    lam = dual.params.lam
    parts, ok = [], True
    for w in (0.5, 0.9):
        e = run(SimConfig(PortfolioState(w, 1.0, 0.0), dt=1e-3, n_paths=200_000, seed=7), OptimalDrawdownTime(), dual)
        psi = value_at(dual, w, 1.0)
        z = (e.mean - psi) / e.std_err
        ok &= abs(z) <= 3.0 and e.std_err < 0.02 / lam
        parts.append(f"w={w}: mean {e.mean:.5f} psi {psi:.5f} se {e.std_err:.4f} z {z:+.2f}")
    record(7, ok, "; ".join(parts) + f" (|z| <= 3, se < {0.02 / lam:g})")


@pytest.mark.slow
def test_criterion_8_dominance(dual):
    parts, ok = [], True
    for w, kinds in [(0.5, [RuinMin(), ConstantFraction(0.0), ConstantFraction(1.0)]), (0.9, [ConstantFraction(0.0), ConstantFraction(1.0)])]:
        cfg = SimConfig(PortfolioState(w, 1.0), dt=1e-2, n_paths=50_000, seed=8)
        res = compare(cfg, [OptimalDrawdownTime(), *kinds], dual)
        for k in res.estimates[1:]:
            d, se = res.difference(k.strategy, "optimal")
            ok &= d > -2 * se
            parts.append(f"w={w} {k.strategy}-optimal {d:+.4f} (se {se:.4f})")
    record(8, ok, "; ".join(parts) + " (each > -2 se)")


@pytest.mark.slow
def test_criterion_9_max_wealth_stasis(dual):
    e = run(SimConfig(PortfolioState(1.0, 1.0), dt=1e-3, n_paths=5_000, seed=9), OptimalDrawdownTime(), dual)
    record(9, e.frac_max_increased < 0.01, f"frac_max_increased {e.frac_max_increased:.4g} (< 0.01)")


@pytest.mark.slow
def test_criterion_10_estimators_agree(dual):
    parts, ok = [], True
    for w in (0.5, 0.9):
        base = dict(dt=1e-2, n_paths=50_000, seed=10)
        a = run(SimConfig(PortfolioState(w, 1.0), **base), OptimalDrawdownTime(), dual)
        b = run(SimConfig(PortfolioState(w, 1.0), estimator=Estimator.KILLED, **base), OptimalDrawdownTime(), dual)
        comb = math.hypot(a.std_err, b.std_err)
        ok &= abs(a.mean - b.mean) < 3 * comb
        parts.append(f"w={w}: discounted {a.mean:.4f} killed {b.mean:.4f} diff/se {(a.mean - b.mean) / comb:+.2f}")
    record(10, ok, "; ".join(parts) + " (|diff| < 3 combined se)")
