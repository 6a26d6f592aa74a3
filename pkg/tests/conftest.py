import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call":
        _CRITERIA.setdefault(k, []).append(report.passed and not hasattr(report, "wasxfail"))
    elif report.failed or report.skipped:
        _CRITERIA.setdefault(k, []).append(False)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        verdict = "PASS" if all(_CRITERIA[k]) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {k}")
