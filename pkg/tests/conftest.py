import pytest

_REPORT: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(number: int, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        print(line)
        _REPORT.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance")
        for line in sorted(_REPORT):
            terminalreporter.write_line(line)
