import pytest

from optagg.topology import nsfnet, toy
from optagg.traffic import load_demands


@pytest.fixture(scope="session")
def nsf():
    return nsfnet()


@pytest.fixture(scope="session")
def toy_topo():
    return toy()


@pytest.fixture(scope="session")
def table1():
    return load_demands("table1")


@pytest.fixture(scope="session")
def toy_demands():
    return load_demands("toy")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
