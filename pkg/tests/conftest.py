import pytest

_SCORECARD = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(label): acceptance scorecard label for a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        status = "PASS" if report.passed else "FAIL"
        _SCORECARD.append(f"[{status}] {marker.args[0]}")


def pytest_terminal_summary(terminalreporter):
    if not _SCORECARD:
        return
    terminalreporter.section("acceptance criteria")
    for line in _SCORECARD:
        terminalreporter.write_line(line)
    _SCORECARD.clear()
