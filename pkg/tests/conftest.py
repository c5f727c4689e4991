import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asyncfw.objectives import estimate_constants, generate_matrix_sensing, generate_pnn  # noqa: E402


@pytest.fixture(scope="session")
def sensing_small():
    return generate_matrix_sensing(8, 6, 2, 300, seed=11)


@pytest.fixture(scope="session")
def sensing_10():
    return generate_matrix_sensing(10, 10, 2, 400, seed=0)


@pytest.fixture(scope="session")
def constants_10(sensing_10):
    return estimate_constants(sensing_10)


@pytest.fixture(scope="session")
def pnn_small():
    return generate_pnn(120, 6, seed=3)
