from __future__ import annotations

import pytest

from support import fig1

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def fig1_nfa():
    return fig1()


@pytest.fixture
def record():
    """``record(criterion, passed, detail)`` stores a line for the acceptance summary."""

    def _record(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[criterion] = (passed, detail)
        print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(
            f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
        )
