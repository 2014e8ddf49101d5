import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


_LINES: dict[int, str] = {}


@pytest.fixture
def report_line():
    """Record a criterion's PASS/FAIL line; all lines are echoed in the terminal summary."""

    def record(check):
        line = check.line()
        _LINES[check.number] = line
        print(line)
        return check

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])
