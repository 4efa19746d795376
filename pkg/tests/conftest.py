import numpy as np
import pytest

from barrierfree._accel import DISABLE_ENV


@pytest.fixture(params=["numba", "numpy"])
def accel_path(request, monkeypatch):
    """Run a test once per kernel path."""
    monkeypatch.setenv(DISABLE_ENV, "1" if request.param == "numpy" else "0")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
