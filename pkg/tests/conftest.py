from __future__ import annotations

import pytest

_LINES: dict[int, str] = {}


class CriterionRecorder:
    def __init__(self, number: int):
        self.number = number
        self.line: str | None = None

    def record(self, passed: bool, detail: str) -> bool:
        self.line = f"{'PASS' if passed else 'FAIL'} criterion {self.number}: {detail}"
        print(self.line)
        return passed


@pytest.fixture
def criterion(request):
    """Per-criterion recorder; the number comes from the ``criterion_number`` marker."""
    rec = CriterionRecorder(request.node.get_closest_marker("criterion_number").args[0])
    yield rec
    _LINES[rec.number] = rec.line or f"FAIL criterion {rec.number}: errored before reporting"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion_number(n): acceptance criterion checked by the test")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
