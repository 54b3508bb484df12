import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.fixture
def report(request):
    """Attach a one-line measurement to the acceptance line of this test."""
    def note(text):
        request.node.user_properties.append(("detail", text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, title = mark.args
    ok = rep.passed and rep.when == "call"
    details = [v for k, v in item.user_properties if k == "detail"]
    prev = _RESULTS.get(n)
    if prev is not None:
        ok = ok and prev[1]
        details = prev[2] + details
    _RESULTS[n] = (title, ok, details)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok, details = _RESULTS[n]
        line = f"[{'PASS' if ok else 'FAIL'}] {n}. {title}"
        if details:
            line += ": " + "; ".join(details)
        terminalreporter.write_line(line)
