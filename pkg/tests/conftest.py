import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = marker.args[0]
    failed = report.failed
    if report.when == "call" or failed:
        prev = _results.get(key, "PASS")
        _results[key] = "FAIL" if failed or prev == "FAIL" else "PASS"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test verifies")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: int(k.split(".")[0])):
        terminalreporter.write_line(f"{_results[key]}  {key}")
