from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
import pytest

from lifetime_drawdown import (
    ConstantFraction,
    DomainError,
    DrawdownProbMin,
    DualFunction,
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
    solve,
    value,
    value_at,
)
from lifetime_drawdown.policy import optimal_left_limit, optimal_right_limit, strategy_label
from lifetime_drawdown.verify import random_params

from conftest import ORACLE


# -- state ---------------------------------------------------------------------
@pytest.mark.parametrize("w, m, x", [(1.1, 1.0, 0.0), (-0.1, 1.0, 0.0), (0.5, 0.0, 0.0), (0.5, 1.0, -1.0), (math.nan, 1.0, 0.0)])
def test_invalid_state(w, m, x):
    with pytest.raises(DomainError):
        PortfolioState(w, m, x)


# -- value ---------------------------------------------------------------------
def test_value_at_zero_wealth(dual, params):
    for m, x in [(1.0, 0.0), (3.0, 2.5)]:
        assert value(dual, PortfolioState(0.0, m, x)) == 1 / params.lam + x


def test_value_additive_in_x(dual):
    for w in (0.1, 0.5, 0.8, 0.95, 1.0):
        for x in (0.5, 7.0):
            assert value_at(dual, w, 1.0, x) - value_at(dual, w, 1.0) == pytest.approx(x, abs=1e-13)


def test_value_oracle(dual):
    assert value_at(dual, 0.9, 1.0) == pytest.approx(ORACLE["psi_at_0.9"], rel=1e-12)
    assert value_at(dual, 0.5, 1.0) == pytest.approx(ORACLE["psi_at_0.5"], rel=1e-13)


def test_value_by_grid_legendre(dual):
    y = np.geomspace(dual.boundaries.y1, 1e3 * dual.boundaries.yalpha, 200_000)
    grid = np.max(dual.zeta_hat(y) - 0.9 * y)
    assert value_at(dual, 0.9, 1.0) == pytest.approx(grid, abs=1e-7)


def test_value_continuous_across_alpha(dual, params):
    a = params.alpha
    lo, hi = value_at(dual, a * (1 - 1e-12), 1.0), value_at(dual, a * (1 + 1e-12), 1.0)
    assert abs(lo - hi) < 1e-9
    assert value_at(dual, a, 1.0) == pytest.approx(lo, abs=1e-9)
    # second-branch formula evaluated exactly at alpha agrees with the first
    g1, g2 = dual.roots.gamma1, dual.roots.gamma2
    t = dual.log_ratio(a)
    second = dual.boundaries.y1 * (1 - g1) * (1 - g2) / (g1 - g2) * (math.exp(g1 * t) / g1 - math.exp(g2 * t) / g2)
    assert second == pytest.approx(dual.zeta(a), rel=1e-12)


def test_value_decreasing_in_w(dual):
    w = np.linspace(0.0, 1.0, 301)
    v = [value_at(dual, float(u), 1.0) for u in w]
    assert all(b < a for a, b in zip(v, v[1:]))


def test_value_scale_invariant(dual):
    for c in (1e-3, 0.5, 7.0, 1e4):
        for w in (0.2, 0.8, 0.9):
            assert value_at(dual, c * w, c, 1.5) == pytest.approx(value_at(dual, w, 1.0, 1.5), rel=1e-13)


# -- optimal strategy -------------------------------------------------------------
def test_optimal_at_maximum_is_zero(dual):
    for m in (0.5, 1.0, 40.0):
        assert policy_optimal(dual, m, m) == 0.0


def test_optimal_oracle(dual):
    assert policy_optimal(dual, 0.9, 1.0) == pytest.approx(ORACLE["pi_opt_at_0.9"], rel=1e-12)


def test_optimal_cross_check_dual_curvature(dual, params):
    y = dual.invert_dual(0.9)
    alt = -params.risk_ratio * 1.0 * y * float(dual.zeta_hat_yy(y))
    assert policy_optimal(dual, 0.9, 1.0) == pytest.approx(alt, rel=1e-12)


def test_optimal_linear_below_alpha(dual, params):
    slope = params.risk_ratio * (1 - dual.roots.gamma2)
    for m in (1.0, 3.0):
        for w in np.linspace(0.01, 0.79, 9) * m:
            assert policy_optimal(dual, float(w), m) == pytest.approx(slope * w, rel=1e-15)


def test_optimal_nonnegative_and_scale_invariant(dual, no_jump_warning):
    for w in np.linspace(0.01, 1.0, 100):
        pi = policy_optimal(dual, float(w), 1.0)
        assert pi >= 0
        assert policy_optimal(dual, 3.5 * w, 3.5) == pytest.approx(3.5 * pi, rel=1e-12, abs=1e-300)


def test_optimal_jump_and_warning(dual, params):
    left, right = optimal_left_limit(dual, 1.0), optimal_right_limit(dual, 1.0)
    assert left > right > 0
    assert left == pytest.approx(params.risk_ratio * (1 - dual.roots.gamma2) * params.alpha, rel=1e-15)
    with pytest.warns(PolicyDiscontinuityWarning):
        at = policy_optimal(dual, params.alpha, 1.0)
    assert at == right
    eps = 1e-10
    assert policy_optimal(dual, params.alpha * (1 + eps), 1.0) == pytest.approx(right, rel=1e-8)
    assert policy_optimal(dual, params.alpha * (1 - eps), 1.0) == pytest.approx(left, rel=1e-8)


def test_optimal_domain(dual):
    for w, m in [(0.0, 1.0), (1.2, 1.0), (-1.0, 1.0), (0.5, 0.0)]:
        with pytest.raises(DomainError):
            policy_optimal(dual, w, m)


def test_optimal_independent_of_y1_level(dual):
    # scaling both boundaries leaves y/y1 and hence the strategy unchanged
    b = dual.boundaries
    for c in (0.5, 3.0):
        scaled = DualFunction(dual.params, dual.roots, dataclasses.replace(b, yalpha=c * b.yalpha, y1=c * b.y1))
        for w in (0.3, 0.85, 0.9, 0.99):
            assert policy_optimal(scaled, w, 1.0) == pytest.approx(policy_optimal(dual, w, 1.0), rel=1e-12)


def test_feedback_form(dual, params):
    for z in np.linspace(0.01, 0.99, 99):
        z = float(z)
        if abs(z - params.alpha) < 1e-4:
            continue
        ref = -params.risk_ratio * dual.zeta_z(z) / dual.zeta_zz(z)
        assert policy_optimal(dual, z, 1.0) == pytest.approx(ref, rel=1e-9)


# -- comparison strategies --------------------------------------------------------------
def test_ruin_strategy(dual, params):
    assert policy_ruin(params, dual.roots, 1.0) == pytest.approx(ORACLE["pi_ruin_at_1"], rel=1e-13)
    assert policy_ruin(params, dual.roots, 1.0) == pytest.approx(1 - dual.roots.gamma1, rel=1e-15)
    for w in (1e-9, 0.3, 2.0):
        assert 0 < policy_ruin(params, dual.roots, w) < params.risk_ratio * w
    with pytest.raises(DomainError):
        policy_ruin(params, dual.roots, 0.0)


def test_ddprob_strategy(dual, params):
    for w in np.linspace(0.801, 1.0, 50):
        assert policy_drawdown_prob(dual, float(w), 1.0) == policy_optimal(dual, float(w), 1.0)
    assert policy_drawdown_prob(dual, 1.0, 1.0) == 0.0
    assert policy_drawdown_prob(dual, 0.9, 1.0) == pytest.approx(ORACLE["pi_opt_at_0.9"], rel=1e-12)
    for w in (0.8, 0.5):
        with pytest.raises(DomainError):
            policy_drawdown_prob(dual, w, 1.0)


def test_occupation_strategy(dual, params):
    g1, g2 = dual.roots.gamma1, dual.roots.gamma2
    rr = params.risk_ratio
    assert policy_occupation(params, dual.roots, 0.5, 1.0) == pytest.approx(rr * (1 - g2) * 0.5)
    assert policy_occupation(params, dual.roots, 0.9, 1.0) == pytest.approx(rr * (1 - g1) * 0.9)
    assert policy_occupation(params, dual.roots, 0.5, 1.0) == policy_optimal(dual, 0.5, 1.0)
    assert policy_occupation(params, dual.roots, 0.9, 1.0) == policy_ruin(params, dual.roots, 0.9)
    # ceiling is fixed: above the simulated maximum it keeps the drawdown slope
    assert policy_occupation(params, dual.roots, 1.5, 2.0) == pytest.approx(rr * (1 - g2) * 1.5)
    assert 1 - g2 > 1 - g1
    with pytest.raises(DomainError):
        policy_occupation(params, dual.roots, 0.8, 1.0)
    with pytest.raises(DomainError):
        policy_occupation(params, dual.roots, 0.0, 1.0)


def test_orderings_on_grids(dual, params):
    a = params.alpha
    for m in (0.5, 1.0, 2.0, 10.0, 250.0):
        for w in np.linspace(a * m * 1e-9, a * m * (1 - 1e-9), 100):
            w = float(w)
            ps, po, pr = policy_optimal(dual, w, m), policy_occupation(params, dual.roots, w, m), policy_ruin(params, dual.roots, w)
            assert abs(ps - po) <= 1e-12 * po
            assert ps > pr * (1 + 1e-12)
        for w in np.linspace(a * m * (1 + 1e-9), m, 100):
            w = float(w)
            ps, pd = policy_optimal(dual, w, m), policy_drawdown_prob(dual, w, m)
            po, pr = policy_occupation(params, dual.roots, w, m), policy_ruin(params, dual.roots, w)
            assert ps == pd
            assert abs(po - pr) <= 1e-12 * pr
            assert ps < po * (1 - 1e-12)
        assert optimal_left_limit(dual, m) > optimal_right_limit(dual, m)


def test_gap_to_ruin_above_alpha(dual, params):
    g1, g2 = dual.roots.gamma1, dual.roots.gamma2
    for z in np.linspace(0.81, 0.999, 40):
        z = float(z)
        y = dual.invert_dual(z)
        gap = params.risk_ratio * (1 - g1) * (y / dual.boundaries.y1) ** (g2 - 1)
        got = policy_ruin(params, dual.roots, z) - policy_optimal(dual, z, 1.0)
        assert got == pytest.approx(gap, rel=1e-9)


@pytest.mark.parametrize("p", random_params(20, seed=3), ids=lambda p: f"a{p.alpha:.3f}")
def test_orderings_random_params(p):
    d = solve(p)
    m = 1.0
    for w in np.linspace(0.01, 0.99, 60) * p.alpha:
        assert policy_optimal(d, float(w), m) > policy_ruin(p, d.roots, float(w))
    # the gap above alpha is rr m (1-g1) (y/y1)^(g2-1), which can fall below double precision
    for w in np.linspace(p.alpha + 1e-6, 1.0 - 1e-9, 60):
        assert policy_optimal(d, float(w), m) <= policy_ruin(p, d.roots, float(w)) * (1 + 1e-12)
    assert optimal_left_limit(d, m) > optimal_right_limit(d, m)


# -- dispatch and parsing ----------------------------------------------------------------
def test_dispatch_routes(dual, params):
    assert policy_dispatch(OptimalDrawdownTime(), dual, 0.9, 1.0) == policy_optimal(dual, 0.9, 1.0)
    assert policy_dispatch(RuinMin(), dual, 0.9, 1.0) == policy_ruin(params, dual.roots, 0.9)
    assert policy_dispatch(DrawdownProbMin(), dual, 0.9, 1.0) == policy_drawdown_prob(dual, 0.9, 1.0)
    assert policy_dispatch(OccupationMin(1.0), dual, 0.5, 1.0) == policy_occupation(params, dual.roots, 0.5, 1.0)
    assert policy_dispatch(ConstantFraction(0.4), dual, 0.9, 1.0) == pytest.approx(0.36)
    with pytest.raises(DomainError):
        policy_dispatch(DrawdownProbMin(), dual, 0.5, 1.0)


def test_parse_strategy():
    assert parse_strategy("optimal") == OptimalDrawdownTime()
    assert parse_strategy("Ruin") == RuinMin()
    assert parse_strategy("ddprob") == DrawdownProbMin()
    assert parse_strategy("occupation", m=2.0) == OccupationMin(2.0)
    assert parse_strategy("occupation:3") == OccupationMin(3.0)
    assert parse_strategy("const:0.5") == ConstantFraction(0.5)
    for bad in ("const", "merton", "optimal:1", "const:x"):
        with pytest.raises(ValueError):
            parse_strategy(bad)
    with pytest.raises(DomainError):
        OccupationMin(0.0)
    with pytest.raises(DomainError):
        ConstantFraction(math.inf)
    assert strategy_label(ConstantFraction(1.0)) == "const:1"
    assert strategy_label(OccupationMin(1.0)) == "occupation:1"
