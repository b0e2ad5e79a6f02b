import sys

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

from mixed_autonomy.config import ScenarioConfig  # noqa: E402
from mixed_autonomy.network import NetworkSpec, Topology  # noqa: E402


@pytest.fixture
def two_by_one():
    return ScenarioConfig(network=NetworkSpec(Topology.TWO_WAY, 2, 1))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
