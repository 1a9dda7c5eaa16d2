import shared


def pytest_terminal_summary(terminalreporter):
    if not shared.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(shared.ACCEPTANCE):
        terminalreporter.write_line(shared.ACCEPTANCE[number])
