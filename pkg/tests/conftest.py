"""Shared pytest hooks: collect acceptance verdicts, print them at the end.

The acceptance tests call record_criterion as they run; the terminal
summary then shows one PASS/FAIL line per criterion so the verdicts are
visible in plain pytest output without -s.
"""

ACCEPTANCE_RESULTS = []


def record_criterion(index: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((index, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for index, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {index}: {verdict}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
