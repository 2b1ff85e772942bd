"""Collects the acceptance outcomes and prints one line per criterion."""

import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    failed = report.failed
    if report.when == "call" or failed:
        prev = _ACCEPTANCE.get(key, (m.group(2), "PASS"))
        _ACCEPTANCE[key] = (m.group(2), "FAIL" if failed or prev[1] == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        name, outcome = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {outcome}  {name.replace('_', ' ')}")
