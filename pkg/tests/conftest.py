import numpy as np
import pytest

from biofilm_fbp.kinetics import KineticsWG, ReactorParams
from biofilm_fbp.steady import steady_thickness_find


@pytest.fixture(scope="session")
def wg_params():
    return KineticsWG()


@pytest.fixture(scope="session")
def reactor():
    return ReactorParams()


@pytest.fixture(scope="session")
def reference_steady(wg_params, reactor):
    """Stationary solution of the reference instance on n = 201."""
    return steady_thickness_find(wg_params, reactor, (1.0, 4.0), n=201)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line, then assert."""

    def check(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
