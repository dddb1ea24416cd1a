import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_jet_coeffs(rng, order, decay=0.5, c1=None):
    c = (rng.normal(size=order) + 1j * rng.normal(size=order)) * decay ** np.arange(order)
    c[0] = c1 if c1 is not None else np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.5, 1.5)
    return c


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


@pytest.fixture
def criterion():
    """``criterion(number, ok, detail)`` records and asserts one acceptance line."""

    def check(number, ok, detail):
        record_criterion(number, bool(ok), detail)
        assert ok, detail

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
