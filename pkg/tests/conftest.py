import re


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call":
                continue
            m = re.search(r"test_acceptance\.py::test_(criterion_\w+)", rep.nodeid)
            if m:
                lines[m.group(1)] = "PASS" if outcome == "passed" else "FAIL"
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{name.replace('_', ' ')}: {lines[name]}")
