import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_REPORT: list[str] = []


def record_acceptance(line: str) -> None:
    print(line)
    _REPORT.append(line)


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
