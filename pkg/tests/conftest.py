import hypothesis
import numpy as np
import pytest

from wptopt import RectennaParams, SspaParams, dbv_to_volts

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.load_profile("default")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def rect():
    return RectennaParams()


@pytest.fixture
def sspa_default():
    """G=1, beta=1, A_s=-35 dBV."""
    return SspaParams(1.0, dbv_to_volts(-35.0), 1.0)


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
