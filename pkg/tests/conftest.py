import pytest

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one part of a numbered criterion; returns that part's verdict."""
    def record(num: int, name: str, passed: bool, detail: str = "") -> bool:
        prev = _CRITERIA.get(num)
        overall = bool(passed)
        # a criterion with several parts passes only if every part does
        if prev is not None:
            overall = overall and prev[1]
            detail = f"{prev[2]}; {detail}" if detail else prev[2]
        _CRITERIA[num] = (name, overall, detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, ok, detail = _CRITERIA[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{num:2d}] {name}: {detail}")
