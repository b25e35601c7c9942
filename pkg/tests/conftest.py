import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repeatable", derandomize=True)
settings.load_profile("repeatable")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "seen": False, "detail": ""})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["seen"] = True
        if report.failed:
            entry["ok"] = False
            entry["detail"] = str(report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash")
                                  else report.longrepr).splitlines()[0][:160]
        elif report.skipped:
            entry["ok"] = None


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "SKIP" if e["ok"] is None or not e["seen"] else ("PASS" if e["ok"] else "FAIL")
        line = f"criterion {n:>2} {status}  {e['title']}"
        if status == "FAIL" and e["detail"]:
            line += f"  [{e['detail']}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
