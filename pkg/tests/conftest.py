from __future__ import annotations

import warnings

import pytest

from lifetime_drawdown import default_params, solve

# Independent high-precision evaluation (50 digits, plain bisection) for the
# shipped parameters r=0.02, mu=0.06, sigma=0.2, kappa=0.04, lam=0.04, alpha=0.8.
ORACLE = {
    "delta": 0.02,
    "gamma1": 0.73205080756887729353,
    "gamma2": -2.7320508075688772935,
    "y1alpha": 0.33120964371501132149,
    "yalpha": 18.014013235734126160,
    "y1": 5.9664149056849981772,
    "y_at_0.9": 11.339933684204404052,
    "psi_at_0.9": 3.8739183885787006799,
    "pi_opt_at_0.9": 0.21676524811167975008,
    "y_at_0.5": 20.431688653718406278,
    "psi_at_0.5": 11.044897128403190208,
    "zeta_at_0.3": 15.398734350992133484,
    "zeta_hat_at_10yalpha": 24.990224006923417062,
    "pi_ruin_at_1": 0.26794919243112270647,
}


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def dual(params):
    return solve(params)


@pytest.fixture
def no_jump_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
