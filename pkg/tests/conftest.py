import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cdmapc.experiments import table_for
from cdmapc.model import SystemConfig

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Collects one pass/fail line per acceptance criterion for the summary."""
    def _report(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def default_table(default_cfg):
    return table_for(default_cfg, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
