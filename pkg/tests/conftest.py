import pytest

from happydensity import find_cycles, new_happy_function, power_function
from happydensity.search import density_sweep

BASE7_DIGITS = [0, 1, 7, 4, 17, 9, 13]

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def H2():
    return power_function(2, 10)


@pytest.fixture(scope="session")
def H3():
    return power_function(3, 10)


@pytest.fixture(scope="session")
def H7():
    return new_happy_function(7, BASE7_DIGITS)


@pytest.fixture(scope="session")
def cycles2(H2):
    return find_cycles(H2)


@pytest.fixture(scope="session")
def cycles3(H3):
    return find_cycles(H3)


@pytest.fixture(scope="session")
def cycles7(H7):
    return find_cycles(H7)


@pytest.fixture(scope="session")
def sweep3_1000(H3, cycles3):
    """(3,10) through n = 1000 in interval mode (about half a minute)."""
    return density_sweep(H3, cycles3, 1000, mode="interval")


@pytest.fixture(scope="session")
def sweep7_400(H7, cycles7):
    return density_sweep(H7, cycles7, 400, mode="exact")


@pytest.fixture(scope="session")
def sweep2_600(H2, cycles2):
    return density_sweep(H2, cycles2, 600, mode="exact")


@pytest.fixture(scope="session")
def sweep2_2500(H2, cycles2):
    return density_sweep(H2, cycles2, 2500, mode="interval")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
