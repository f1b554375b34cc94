import pytest

from wavediv.dyadic import BesovParams
from wavediv.systems import find_dyadic_covering, haar_system


@pytest.fixture(scope="session")
def haar():
    return haar_system(1)


@pytest.fixture(scope="session")
def haar_cov(haar):
    return find_dyadic_covering(haar, 1, 1.0)


@pytest.fixture(scope="session")
def p_half():
    return BesovParams(0.5, 2.0, 2.0, 1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS, line
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(line(n))
