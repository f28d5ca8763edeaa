import re
from collections import defaultdict

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[int(match.group(1))].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        results = _outcomes[number]
        failed = [name for name, outcome in results if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        line = f"criterion {number}: {status} ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
