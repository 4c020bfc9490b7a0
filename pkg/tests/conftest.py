import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from divzeta import build_table  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def d_table():
    return build_table("d", 2_000_100)


@pytest.fixture(scope="session")
def r_table():
    return build_table("r", 300_000)


@pytest.fixture(scope="session")
def tau_table():
    return build_table("tau", 20_100)


@pytest.fixture(scope="session")
def tau_oracle():
    import oracles
    return oracles.tau_values(10_000)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
