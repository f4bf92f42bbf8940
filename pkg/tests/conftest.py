import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        CRITERIA[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
