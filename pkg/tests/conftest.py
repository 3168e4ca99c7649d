import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        if n not in _outcomes or _outcomes[n][0] == "PASS":
            _outcomes[n] = ("PASS" if report.passed else "FAIL", m.group(2).replace("_", " "))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status, name = _outcomes[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {name}")
