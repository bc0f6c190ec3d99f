"""Shared pytest plumbing.

The acceptance module records one verdict line per criterion through
:func:`log_acceptance`; the terminal-summary hook below replays them after
the test run so the full table is visible even for passing tests (whose
stdout pytest captures and hides).
"""

_ACCEPTANCE_LINES: list = []


def log_acceptance(line: str) -> None:
    """Record (and echo) one acceptance-criterion verdict line."""
    _ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
