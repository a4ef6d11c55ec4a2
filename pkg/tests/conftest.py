import numpy as np
import pytest
from hypothesis import settings

from gxesym import CaseControlData, PrevalenceSpec, RiskSpec
from gxesym.simgen import gen_case_control, get_scenario

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def random_data(rng, n0=30, n1=25, q=2, p_x=1, levels=3, continuous_x=False):
    """Small dataset with discrete G (0..levels-1) and binary or normal X."""
    while True:
        d = np.r_[np.zeros(n0, int), np.ones(n1, int)]
        g = rng.integers(0, levels, size=(n0 + n1, q)).astype(float)
        if continuous_x:
            x = rng.normal(size=(n0 + n1, p_x))
        else:
            x = rng.integers(0, 2, size=(n0 + n1, p_x)).astype(float)
        try:
            return CaseControlData(d, g, x)
        except ValueError:
            continue


@pytest.fixture(scope="session")
def base_data():
    return gen_case_control(get_scenario("base"), 400, 400, seed=11)


@pytest.fixture(scope="session")
def base_spec():
    return RiskSpec(5, 1)


@pytest.fixture(scope="session")
def known():
    return PrevalenceSpec.known(0.03)


@pytest.fixture(scope="session")
def rare():
    return PrevalenceSpec.rare()
