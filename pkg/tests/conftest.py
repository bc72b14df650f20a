"""Shared pytest hooks: the acceptance suite prints one verdict line per criterion."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record ``(number, passed, detail, runtime_s, limit_s)`` for the end-of-run summary."""

    def record(number, title, passed, detail, runtime, limit):
        within = runtime < limit
        ok = bool(passed and within)
        line = (f"{'PASS' if ok else 'FAIL'} criterion {number:2d} [{title}]: {detail}; "
                f"runtime {runtime:.1f}s (limit {limit:.0f}s)")
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
