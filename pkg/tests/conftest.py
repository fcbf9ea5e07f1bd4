import numpy as np
import pytest

from dirac_jmatrix.potential import PotentialSpec, gaussian, odd_gaussian


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def barrier():
    """Even Gaussian vector barrier, height 2M (M = 1), width 1."""
    return PotentialSpec(V=gaussian(2.0, 1.0), X=6.0, name="gaussian barrier")


@pytest.fixture(scope="session")
def odd_pseudo():
    return PotentialSpec(U=odd_gaussian(2.0, 1.0), X=6.0, name="odd pseudo-scalar")


@pytest.fixture(scope="session")
def shifted_barrier():
    return PotentialSpec(V=gaussian(2.0, 1.0, 0.5), X=6.5, name="off-centre barrier")


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary and return the flag."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
