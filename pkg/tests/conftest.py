import pytest

from qmeter.spinops import SpinSystem

# filled by test_acceptance.py; printed once at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def pair_system():
    return SpinSystem.radical_pair()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
