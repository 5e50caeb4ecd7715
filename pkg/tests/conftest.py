import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion k")
    config.addinivalue_line("markers", "slow: Monte Carlo runs of a minute or more")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    k, title = mark.args
    entry = _RESULTS.setdefault(k, {"title": title, "ok": True, "seen": False})
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["seen"] = True
        if rep.outcome != "passed":
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        e = _RESULTS[k]
        status = "PASS" if e["ok"] and e["seen"] else "FAIL"
        terminalreporter.write_line(f"criterion {k:2d} {status}  {e['title']}")
