"""Collects acceptance results and prints one PASS/FAIL line per criterion."""
import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label, text = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _RESULTS[label] = ("PASS" if report.passed else "FAIL", text)


def _key(label):
    head = label.split()[0]
    return (int(head) if head.isdigit() else 99, label)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS, key=_key):
        status, text = _RESULTS[label]
        terminalreporter.write_line(f"criterion {label}: {status}  {text}")
