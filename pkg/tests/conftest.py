import pytest

from tugofwar import Domain, build_grid


@pytest.fixture(scope="session")
def unit_interval():
    return Domain.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def disk():
    return Domain.disk()


@pytest.fixture(scope="session")
def small_disk_grid(disk):
    return build_grid(disk, 0.2, 0.2 / 3)


@pytest.fixture(scope="session")
def square():
    return Domain.unit_square()



def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
