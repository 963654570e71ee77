import pytest

from sco import fixtures
from sco.powermodel import synthetic_templates

_CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, passed, detail)``."""

    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def inv():
    return fixtures.inverter()


@pytest.fixture
def c17():
    return fixtures.c17()


@pytest.fixture
def indep():
    return fixtures.independent()


@pytest.fixture
def indep_templates(indep):
    return synthetic_templates(indep, length=48, seed=5)
