import numpy as np
import pytest

_CRITERIA = {}
_OUTCOMES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _CRITERIA[item.nodeid] = marker.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.failed or (report.when == "call" and report.skipped):
        _OUTCOMES[report.nodeid] = "SKIP" if report.skipped else "FAIL"
    elif report.when == "call" and report.nodeid not in _OUTCOMES:
        _OUTCOMES[report.nodeid] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    by_number = {}
    for nodeid, (number, title) in _CRITERIA.items():
        if nodeid in _OUTCOMES:
            by_number.setdefault((number, title), []).append(_OUTCOMES[nodeid])
    for (number, title), outcomes in sorted(by_number.items()):
        status = "PASS" if all(o == "PASS" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}")
