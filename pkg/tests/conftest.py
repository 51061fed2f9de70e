"""Shared pytest wiring: the acceptance report printed at the end of the session."""
import pytest

_LINES = []


@pytest.fixture
def report():
    """``report(label, ok, detail)`` records one PASS/FAIL line and returns ``ok``."""
    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        _LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
