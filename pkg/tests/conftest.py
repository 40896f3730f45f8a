import math

import pytest

from maryland.minsol import MinSolContext
from maryland.params import SpectralParams
from maryland.sigma import SigmaContext

GOLDEN = (math.sqrt(5) - 1) / 2
SILVER = math.sqrt(2) - 1

# criterion number -> (passed, text), filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, title, passed, measured, tol):
    ACCEPTANCE[number] = (bool(passed), f"{title}: measured {measured:.3e}, tol {tol:.0e}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"ACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def golden_sigma():
    return SigmaContext(GOLDEN)


@pytest.fixture(scope="session")
def silver_sigma():
    return SigmaContext(SILVER)


@pytest.fixture(scope="session")
def base_params():
    return SpectralParams(GOLDEN, 0.3, 1.0, 0.5)


@pytest.fixture(scope="session")
def base_ctx(base_params, golden_sigma):
    return MinSolContext(base_params, sigma=golden_sigma)
