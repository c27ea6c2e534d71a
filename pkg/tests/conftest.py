"""Shared pytest hooks.

Acceptance tests append ``(number, passed, detail)`` to ``ACCEPTANCE``; the
terminal summary prints one line per criterion whether or not ``-s`` is set.
"""

ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
