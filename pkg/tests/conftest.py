"""Shared fixtures plus a pass/fail summary line per acceptance criterion."""

from __future__ import annotations

import pytest

_ACCEPTANCE_MODULE = "test_acceptance"
_results: list[tuple[str, bool]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    if item.module.__name__ == _ACCEPTANCE_MODULE:
        _results.append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in _results:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}")
