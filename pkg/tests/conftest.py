import numpy as np
import pytest

from rdmono.design import Dataset, FunctionSpace
from rdmono.estimator import split_sides
from rdmono.geometry import MonotoneSet, NormSpec


@pytest.fixture
def f4_data():
    """Four-point d=1 fixture: two treated (x < 0), two control (x > 0)."""
    return Dataset(
        x=np.array([[-0.1], [-0.4], [0.2], [0.3]]),
        y=np.array([0.5, -0.2, 1.1, 1.4]),
        treated=np.array([True, True, False, False]),
        sigma=np.array([1.0, 1.5, 0.8, 1.2]),
    )


@pytest.fixture
def f4_space():
    return FunctionSpace(C=1.0, V=MonotoneSet.full(1), norm=NormSpec("wl1", (1.0,)))


@pytest.fixture
def f4_sides(f4_data, f4_space):
    return split_sides(f4_data, f4_space)


def make_random_design(rng, n=40, d=1, hetero=True):
    """Random preprocessed dataset with both sides populated."""
    x = rng.uniform(-1.0, 1.0, size=(n, d))
    treated = x[:, 0] < 0
    if not treated.any():
        treated[0] = True
    if treated.all():
        treated[-1] = False
    y = rng.standard_normal(n)
    sigma = rng.uniform(0.5, 2.0, size=n) if hetero else np.full(n, 1.0)
    return Dataset(x, y, treated, sigma)
