"""Shared pytest plumbing: collect acceptance-criterion verdict lines and
print them after the run, outside stdout capture."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_log():
    def log(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
