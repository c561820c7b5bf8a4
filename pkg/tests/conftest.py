import numpy as np
import pytest

from wfdiff.schedule import make_schedule

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def small_schedule():
    return make_schedule(T=8, lf_shape=(4, 4), beta_min=1e-3, beta_max=0.2)


@pytest.fixture
def rand_image():
    def make(shape, seed=0):
        return np.random.default_rng(seed).random(shape)
    return make
