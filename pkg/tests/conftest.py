import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from viscospec.spectral import Grid, TensorField, VectorField, dealias, fft_forward, project_hat  # noqa: E402


def rand_field(cls, grid, rng, band=True, project=True, scale=1.0):
    vals = scale * rng.standard_normal((grid.d,) * cls.rank + grid.shape)
    hat = fft_forward(vals, grid)
    if band:
        hat = dealias(hat, grid)
    if project and cls.rank:
        hat = project_hat(hat, grid)
    return cls(grid, hat, divergence_free=bool(project and cls.rank))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def g16():
    return Grid(2, 16)


@pytest.fixture
def randvec(rng):
    return lambda grid, **kw: rand_field(VectorField, grid, rng, **kw)


@pytest.fixture
def randten(rng):
    return lambda grid, **kw: rand_field(TensorField, grid, rng, **kw)
