import numpy as np
import pytest

from fracorder.scenarios import example1, example2


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def ex1():
    return example1(0.5, 2)


@pytest.fixture(scope="session")
def ex2():
    return example2(0.5, 2)
