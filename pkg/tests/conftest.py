import numpy as np
import pytest

from jrme.kernels import BACKEND, warmup_jit


def pytest_configure(config):
    # compile the hot kernels once, before anything that measures time
    warmup_jit()


def pytest_report_header(config):
    return f"jrme kernel backend: {BACKEND}"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
