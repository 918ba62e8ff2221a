import numpy as np
import pytest

from ergolab.hamiltonians import build_model, diagonalize
from ergolab.states import LatticeSpec


@pytest.fixture(scope="session")
def lat6():
    return LatticeSpec(6, 2, "chain-open")


@pytest.fixture(scope="session")
def spec6(lat6):
    """Diagonalized 6-site mixed-field Ising chain, reused across tests."""
    return diagonalize(build_model("mixed-field-ising", lat6))


@pytest.fixture(scope="session")
def spec8():
    lat = LatticeSpec(8, 2, "chain-open")
    return diagonalize(build_model("mixed-field-ising", lat))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
