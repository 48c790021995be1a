"""
pytest configuration and fixtures for eco-deflect tests.
"""

import numpy as np
import pytest

from eco_deflect.config import SolverOptions
from eco_deflect.elements import OrbitElements
from eco_deflect.scenario import build_collision_scenario, load_shipped
from eco_deflect.units import make_canonical_units


@pytest.fixture(scope="session")
def units():
    return make_canonical_units()


@pytest.fixture(scope="session")
def scenario():
    """Default shipped scenario: a = 1.2 au, e = 0.6, 10 MW laser."""
    return load_shipped()


@pytest.fixture(scope="session")
def bennu_scenario():
    return load_shipped("bennu_like")


@pytest.fixture
def eco_elements():
    return OrbitElements(a=1.2, e=0.6, argp=0.3, anomaly=1.1)


@pytest.fixture(scope="session")
def collision_setup(scenario):
    """Collision setup starting 0.9 ECO periods before impact."""
    return build_collision_scenario(scenario, 0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fast_options():
    """Coarse mesh and a single seed, for tests that only exercise the plumbing."""
    return SolverOptions(nodes=8, restarts=1, max_outer=15, inner_maxiter=150, workers=1)
