import numpy as np
import pytest
from hypothesis import settings

from dnmaps.mesh import attach_handle, make_flat_disk, make_torus_with_hole, nearest_vertex

settings.register_profile("dnmaps", deadline=None, max_examples=40)
settings.load_profile("dnmaps")


@pytest.fixture(scope="session")
def disk64():
    return make_flat_disk(64)


@pytest.fixture(scope="session")
def disk128():
    return make_flat_disk(128)


@pytest.fixture(scope="session")
def disk256():
    return make_flat_disk(256)


@pytest.fixture(scope="session")
def torus():
    return make_torus_with_hole(64, 0.2, 256)


@pytest.fixture(scope="session")
def small_torus():
    return make_torus_with_hole(24, 0.2)


@pytest.fixture(scope="session")
def handle128(disk128):
    a = nearest_vertex(disk128, (-0.45, 0.0))
    b = nearest_vertex(disk128, (0.45, 0.0))
    return attach_handle(disk128, a, b, 0.1, 0.5)


def fourier_mode(n, k, phase=0.0):
    return np.cos(2 * np.pi * k * np.arange(n) / n + phase)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
