import os

import pytest

from ddid.backend import get_engine
from ddid.problems.orienteering import example1

# The heavier suites default to the in-process engine; set DDID_TEST_ENGINE=cbc
# to run them through the external solver instead.
HEAVY_ENGINE = os.environ.get("DDID_TEST_ENGINE", "highs")


@pytest.fixture(scope="session")
def cbc():
    return get_engine("cbc")


@pytest.fixture(scope="session")
def highs():
    return get_engine("highs")


@pytest.fixture(params=["cbc", "highs"])
def engine(request):
    return get_engine(request.param)


@pytest.fixture(scope="session")
def heavy_engine():
    return get_engine(HEAVY_ENGINE)


@pytest.fixture
def ex1():
    return example1(budget=1)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and report.when == "call":
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome
    elif "test_acceptance.py::test_criterion_" in report.nodeid and report.failed:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2])):
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {name.split('_')[2]}: {verdict} ({name})")
