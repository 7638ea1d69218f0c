"""Acceptance-criterion result collection: one summary line per criterion."""

from typing import Dict, Tuple

import pytest

_RESULTS: Dict[int, Tuple[bool, str]] = {}


@pytest.fixture
def criterion_log():
    def record(number: int, ok: bool, detail: str) -> None:
        _RESULTS[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status} - {detail}")
