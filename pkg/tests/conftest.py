import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def numeric_directional(func, X, D, h=1e-6):
    """Central finite difference of func at X along direction D."""
    return (func(X + h * D) - func(X - h * D)) / (2.0 * h)
