import numpy as np
import pytest

from reactmix.mixture import MixtureParams, ReactionNetwork
from reactmix.spectral import SpectralGrid


@pytest.fixture
def grid():
    return SpectralGrid(64)


@pytest.fixture
def abc():
    "A + B -> C with alpha = (1, 1) and product weight 2."
    return ReactionNetwork(reagents=(0, 1), products=(2,), alpha=(1.0, 1.0),
                           prod_weight=(2.0,))


@pytest.fixture
def params3():
    return MixtureParams(gamma=(2.0, 2.0, 2.0), molar_mass=(10.0, 10.0, 10.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
