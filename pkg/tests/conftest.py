import re

_CRITERION = re.compile(r"test_criterion_(\d+)_")


def pytest_terminal_summary(terminalreporter):
    results = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if report.when != "call" and status != "error":
                continue
            match = _CRITERION.search(report.nodeid)
            if not match or "test_acceptance" not in report.nodeid:
                continue
            n = int(match.group(1))
            ok = status == "passed"
            results[n] = results.get(n, True) and ok
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if results[n] else 'FAIL'}")
