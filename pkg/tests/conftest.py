import functools
import sys

import pytest

from ftswitch.scenario import load_bundled
from ftswitch.simulation import run_scenario
from ftswitch.topology import canonical_topology


@functools.lru_cache(maxsize=None)
def bundled_run(name: str):
    """Run a bundled scenario once per test session (each takes a few seconds)."""
    return run_scenario(load_bundled(name))


@pytest.fixture
def canon():
    return canonical_topology()


@pytest.fixture(scope="session")
def run_bundled():
    return bundled_run


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
