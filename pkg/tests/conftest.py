import warnings

import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a numbered acceptance criterion outcome for the terminal summary."""

    def record(number, passed, detail=""):
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
