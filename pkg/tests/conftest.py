import numpy as np
import pytest

from aspline.basis import build_design, make_knots
from aspline.linalg import BandedSymMatrix
from aspline.solver import DesignProducts


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_banded_spd(rng, dim, bandwidth, diag_boost=0.0):
    """SPD banded test matrix built as L L^T from a random banded lower factor."""
    L = np.zeros((dim, dim))
    for i in range(dim):
        L[i, i] = rng.uniform(0.5, 2.0) + diag_boost
        for j in range(max(0, i - bandwidth), i):
            L[i, j] = rng.uniform(-1.0, 1.0)
    dense = L @ L.T
    return BandedSymMatrix.from_dense(dense, bandwidth), dense


def logit_dataset(rng, n=200, sigma=0.15):
    x = rng.uniform(0.0, 1.0, n)
    y = 1.0 / (1.0 + np.exp(-20.0 * (x - 0.5))) + sigma * rng.standard_normal(n)
    return x, y


def step_dataset(rng, n=400, jumps=(0.25, 0.5, 0.75), levels=(0.0, 1.0, 0.0, 1.0), sigma=0.2):
    x = rng.uniform(0.0, 1.0, n)
    y = np.asarray(levels, float)[np.searchsorted(np.asarray(jumps), x)]
    return x, y + sigma * rng.standard_normal(n)


def products_for(x, y, degree, k, domain=(0.0, 1.0)):
    kv = make_knots(domain[0], domain[1], k, degree)
    return kv, DesignProducts.from_data(build_design(kv, x), y)
