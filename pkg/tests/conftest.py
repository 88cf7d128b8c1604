import re

import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    n, title = str(marker.args[0]), marker.args[1]
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if report.passed else "FAIL"
    # a later phase (teardown) failure overrides an earlier pass
    if _CRITERIA.get(n, ("PASS",))[0] == "PASS":
        _CRITERIA[n] = (status, f"{title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA, key=lambda c: (int(re.match(r"\d+", c).group()), c)):
        status, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>3}: {status}  {text}")
