import numpy as np
import pytest

from ownvoice import StftConfig


@pytest.fixture
def cfg():
    return StftConfig(256, 128, 5000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def direct_dft_frame(frame):
    """One-sided DFT by explicit summation; independent of numpy.fft."""
    K = frame.size
    n = np.arange(K)
    return np.array([np.sum(frame * np.exp(-2j * np.pi * k * n / K)) for k in range(K // 2 + 1)])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
