import warnings

import pytest

from degencft.virasoro import QEIPreconditionWarning

ACCEPTANCE = {}


@pytest.fixture
def record():
    """record(k, passed, detail) stores one acceptance line."""
    def _rec(k, passed, detail):
        ACCEPTANCE[k] = (bool(passed), detail)
        return passed
    return _rec


@pytest.fixture(autouse=True)
def _quiet_precondition():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QEIPreconditionWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
