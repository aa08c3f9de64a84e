import pytest

_CRITERIA: list[tuple[str, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion("4", passed, "what was measured")``."""

    def record(number: str, passed: bool, text: str) -> bool:
        line = f"criterion {number:>3}: {'PASS' if passed else 'FAIL'}  {text}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def _order(item):
    head = "".join(ch for ch in item[0] if ch.isdigit())
    return (int(head or 0), item[0])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA, key=_order):
        terminalreporter.write_line(line)
