import numpy as np
import pytest

from multisecretary import new_distribution


@pytest.fixture(scope="session")
def uniform5():
    return new_distribution([2.00, 1.55, 1.10, 0.65, 0.20], [0.2] * 5)


@pytest.fixture(scope="session")
def uniform3():
    return new_distribution([3.0, 2.0, 1.0], [1 / 3] * 3)


@pytest.fixture(scope="session")
def uniform10():
    return new_distribution(np.arange(2.0, 0.1, -0.2).round(1), [0.1] * 10)


@pytest.fixture(scope="session")
def masspoint5():
    # five points with unequal masses; smallest mass 5/28
    return new_distribution(
        [1.0, 0.8, 0.7, 0.5, 0.2], [5 / 28, 6 / 28, 7 / 28, 5 / 28, 5 / 28]
    )


@pytest.fixture(scope="session")
def small_family():
    """Small-support distributions driving the brute-force equivalence suite."""
    return [
        new_distribution([1.0], [1.0]),
        new_distribution([2.0, 0.5], [0.35, 0.65]),
        new_distribution([3.0, 2.0, 1.0], [0.5, 0.2, 0.3]),
    ]
