import pytest

# criterion id -> (passed, detail); filled by the acceptance tests
ACCEPTANCE_LINES: dict = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
