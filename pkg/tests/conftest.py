import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the pass/fail line of an acceptance criterion."""

    def record(number: int, passed: bool, detail: str, seconds: float, limit: float):
        verdict = "PASS" if passed and seconds < limit else "FAIL"
        line = f"criterion {number}: {verdict}  {detail}  [{seconds:.1f} s, limit {limit:g} s]"
        _LINES[number] = line
        print(line)
        return verdict == "PASS"

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])
