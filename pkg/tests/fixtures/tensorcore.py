"""
Fixtures for the tensor engine.
"""

# Python imports
import numpy as np
from pytest import fixture


@fixture
def rng() -> np.random.Generator:
    """Seeded generator; every test gets a fresh one."""
    return np.random.default_rng(1234)
