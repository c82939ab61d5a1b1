ACCEPTANCE_LINES: list[str] = []


def record(label: str, passed: bool, detail: str = "") -> None:
    line = f"{label}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
