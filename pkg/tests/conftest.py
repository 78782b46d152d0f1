import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rigid_drift import experiments as ex  # noqa: E402


@pytest.fixture(scope="session")
def base_spec():
    return ex.stress_spec()


@pytest.fixture(scope="session")
def stress_results():
    """The full long-time matrix (three methods x two step sizes over [0, 15000]).

    This is the expensive part of the suite, so it runs once per session.
    """
    report, runs = ex.stress_test_suite()
    return report, runs


@pytest.fixture(scope="session")
def reference(base_spec):
    return ex.reference_solution(base_spec)



ACCEPTANCE_LINES = []


@pytest.fixture
def verdict_line():
    """Record a one-line PASS/FAIL summary for the acceptance report."""

    def record(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
