import pytest

_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line; shown in the terminal summary."""
    def record(number, passed, detail):
        _CRITERIA.append((number, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
