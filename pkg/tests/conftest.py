import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SIX_REFS = (0.10, 0.13, 0.42, 0.52, 0.75, 0.95)
SIX_XSTAR = (0.14, 0.14, 0.42, 0.52, 0.75, 0.90)

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        num, title = mark.args
        detail = ""
        if rep.failed and call.excinfo is not None:
            detail = str(call.excinfo.value).splitlines()[0][:160]
        _outcomes[num] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        title, status, detail = _outcomes[num]
        line = f"criterion {num:2d} {status}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
