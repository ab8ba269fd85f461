"""Shared test fixtures and the acceptance-criterion reporter.

Acceptance tests record one line per criterion through the ``criterion``
fixture; the lines are re-printed in the terminal summary so they are
visible even when pytest captures test output.
"""

from __future__ import annotations

import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """Returns record(num, description, ok, detail=''): prints and stores a
    single PASS/FAIL line, then asserts."""

    def record(num: int, description: str, ok: bool, detail: str = "") -> None:
        verdict = "PASS" if ok else "FAIL"
        line = f"criterion {num:2d} {verdict}: {description}"
        if detail:
            line += f" [{detail}]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
