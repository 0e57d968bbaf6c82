from collections import OrderedDict

import pytest

_criteria: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            num, title = mark.args
            _criteria.setdefault(num, {"title": title, "outcomes": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    mark = next((m for m in getattr(report, "_criterion_marks", []) if m), None)
    if mark is None:
        return
    _criteria[mark]["outcomes"].append((report.nodeid, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    rep._criterion_marks = [mark.args[0]] if mark else []


def pytest_terminal_summary(terminalreporter):
    ran = {k: v for k, v in _criteria.items() if v["outcomes"]}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for num, info in sorted(ran.items()):
        failed = [nid for nid, out in info["outcomes"] if out != "passed"]
        status = "PASS" if not failed else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2} {status}: {info['title']}")
        for nid in failed:
            terminalreporter.write_line(f"              failing: {nid.split('::', 1)[-1]}")
