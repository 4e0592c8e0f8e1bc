from __future__ import annotations

import json
import math

import pytest

from lifetime_drawdown import MarketParams, ParamError, default_params, load_params, validate
from lifetime_drawdown.errors import (
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

GOOD = dict(r=0.02, mu=0.06, sigma=0.20, kappa=0.04, lam=0.04, alpha=0.8)


def test_shipped_params_are_valid():
    p = validate(GOOD)
    assert p == default_params()
    assert p.delta == pytest.approx(0.02, rel=1e-15)
    assert p.risk_ratio == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize(
    "change, err",
    [
        ({"r": 0.0}, RNotPositive),
        ({"r": -0.01}, RNotPositive),
        ({"mu": 0.02}, MuNotAboveR),
        ({"mu": 0.01}, MuNotAboveR),
        ({"sigma": 0.0}, SigmaNotPositive),
        ({"kappa": 0.02}, KappaNotAboveR),
        ({"lam": 0.0}, LamNotPositive),
        ({"alpha": 1.0}, AlphaOutOfRange),
        ({"alpha": 0.0}, AlphaOutOfRange),
        ({"alpha": 1.5}, AlphaOutOfRange),
        ({"sigma": math.nan}, NonFiniteParam),
        ({"mu": math.inf}, NonFiniteParam),
        ({"lam": "0.04"}, NonFiniteParam),
        ({"lam": True}, NonFiniteParam),
    ],
)
def test_each_violation_has_its_own_error(change, err):
    with pytest.raises(err):
        validate({**GOOD, **change})


def test_errors_are_distinct_value_errors():
    kinds = {RNotPositive, MuNotAboveR, SigmaNotPositive, KappaNotAboveR, LamNotPositive, AlphaOutOfRange}
    assert len(kinds) == 6
    for k in kinds:
        assert issubclass(k, ParamError) and issubclass(k, ValueError)


def test_first_violation_wins():
    with pytest.raises(MuNotAboveR):
        validate({**GOOD, "mu": 0.0, "alpha": 2.0})


def test_key_set_is_exact():
    with pytest.raises(UnknownKey):
        validate({**GOOD, "beta": 1.0})
    missing = dict(GOOD)
    del missing["kappa"]
    with pytest.raises(MissingKey):
        validate(missing)


def test_validate_is_idempotent():
    p = validate(GOOD)
    assert validate(p) == p
    assert validate(p.to_dict()) == p


def test_constructor_validates():
    with pytest.raises(KappaNotAboveR):
        MarketParams(0.02, 0.06, 0.2, 0.01, 0.04, 0.8)


def test_replace_revalidates():
    p = default_params()
    assert p.replace(alpha=0.5).alpha == 0.5
    with pytest.raises(AlphaOutOfRange):
        p.replace(alpha=1.0)


def test_load_params(tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps(GOOD))
    assert load_params(f) == validate(GOOD)
    f.write_text(json.dumps({**GOOD, "extra": 1}))
    with pytest.raises(UnknownKey):
        load_params(f)
    f.write_text("[1, 2]")
    with pytest.raises(ParamError):
        load_params(f)
