import numpy as np
import pytest

from vinfo import LabelSpace


@pytest.fixture(scope="session")
def binary_space():
    return LabelSpace(("c0", "c1"))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
