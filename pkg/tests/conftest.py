import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, outcomes of its tests)
CRITERIA: dict[int, tuple[str, list[bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = CRITERIA.setdefault(number, (title, []))
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry[1].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, results = CRITERIA[number]
        status = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}")
