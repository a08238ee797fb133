import re

from hypothesis import settings

settings.register_profile("mlext", deadline=None)
settings.load_profile("mlext")

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = _outcomes.get(n)
        if prev is None or prev[1] == "passed":
            detail = dict(report.user_properties).get("detail", "")
            _outcomes[n] = (m.group(2).replace("_", " "), report.outcome, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        title, outcome, duration, detail = _outcomes[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {n} ({title}): {verdict} in {duration:.2f}s"
        terminalreporter.write_line(line + (f"; {detail}" if detail else ""))
