"""Shared pytest configuration.

The acceptance tests record a one-line verdict per criterion through the
``criterion_log`` fixture; those lines are replayed in the terminal summary so
a full run ends with a readable pass/fail table.
"""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_log():
    def record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
