import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "setup":
        # shared simulation fixtures are built during setup
        item._setup_time = rep.duration
        if rep.passed:
            return
    elif rep.when != "call":
        return
    n = mark.args[0]
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    took = rep.duration + (getattr(item, "_setup_time", 0.0) if rep.when == "call" else 0.0)
    line = f"criterion {n:2d} [{'PASS' if rep.passed else 'FAIL'}] {title} ({took:.1f}s)"
    item.config._criteria[n] = line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        terminalreporter.write_line(crit[n])
