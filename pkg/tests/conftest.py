import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    crit = item.get_closest_marker("criterion")
    if crit is None:
        return
    num, title = crit.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        # parametrized criteria merge into one line; any failing case fails it
        _, status, props = ACCEPTANCE.get(num, (title, "PASS", []))
        status = status if rep.passed else "FAIL"
        ACCEPTANCE[num] = (title, status, props + list(item.user_properties))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, status, props = ACCEPTANCE[num]
        extra = "; ".join(f"{k}={v}" for k, v in props)
        tr.write_line(f"[{status}] criterion {num}: {title}" + (f" ({extra})" if extra else ""))
