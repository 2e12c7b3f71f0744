import numpy as np
import pytest

from nsanderson import ensembles


@pytest.fixture
def two_point_03():
    return ensembles.two_point_ensemble(0.0, 3.0, gamma=2.0, c0=10.0,
                                        k=4.0, epsilon_var=0.5)


@pytest.fixture
def two_point_08():
    return ensembles.two_point_ensemble(0.0, 8.0, gamma=2.0, c0=65.0,
                                        k=9.0, epsilon_var=0.5)


def dense_operator(potentials: np.ndarray) -> np.ndarray:
    m = len(potentials)
    H = np.diag(np.asarray(potentials, dtype=float))
    if m > 1:
        idx = np.arange(m - 1)
        H[idx, idx + 1] = 1.0
        H[idx + 1, idx] = 1.0
    return H
