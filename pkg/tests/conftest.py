from hypothesis import settings

# timing varies a lot on shared CI runners; correctness is what the properties check
settings.register_profile("repo", deadline=None, print_blob=True)
settings.load_profile("repo")

import pytest

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if "test_acceptance" in item.nodeid:
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        rep.user_properties.append(("criterion", doc))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, report.outcome.upper())
        _ACCEPTANCE.append((props["criterion"], status, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, measured in _ACCEPTANCE:
        line = f"{status:4}  {crit}"
        terminalreporter.write_line(line + (f"  [{measured}]" if measured else ""))
