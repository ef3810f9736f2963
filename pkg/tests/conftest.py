import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = mark.args
    details = [v for k, v in item.user_properties if k == "detail"]
    _RESULTS[number] = (rep.passed, title, details)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        passed, title, details = _RESULTS[number]
        tag = "PASS" if passed else "FAIL"
        extra = "; ".join(details)
        terminalreporter.write_line(f"{tag} criterion {number}: {title}" + (f" [{extra}]" if extra else ""))
