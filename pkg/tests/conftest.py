import numpy as np
import pytest

from robust_slp.geometry import psk_constellation
from robust_slp.precoder import draw_instance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def psk8():
    return psk_constellation(8)


def random_instance(rng, N=4, K=4, M=8, gamma_db=10.0, sigma2=1.0):
    return draw_instance(rng, N, K, psk_constellation(M), sigma2, 10.0 ** (gamma_db / 10.0))


def random_spd(rng):
    b = rng.standard_normal((2, 2))
    return b @ b.T + 0.1 * np.eye(2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
