from _acceptance_log import LINES


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria results:")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
