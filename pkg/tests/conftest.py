from __future__ import annotations


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT_LINES:
            terminalreporter.write_line(line)
