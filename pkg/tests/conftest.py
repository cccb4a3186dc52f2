import math

import pytest

from subdiffusion import BoxDomain

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def interval():
    return BoxDomain.interval()


@pytest.fixture
def square():
    return BoxDomain.rectangle(math.pi, math.pi)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
