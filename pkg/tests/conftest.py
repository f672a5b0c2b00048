import numpy as np
import pytest

from smooth_threshold.kernels import SurrogateLoss, get_kernel
from smooth_threshold.risk import Dataset, SmoothedRiskSpec, WeightScheme


def rng_for(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def random_spec(n=40, d=3, seed=0, kernel="gaussian", delta=1.0, weights=None,
                scale=1.0):
    """Small random threshold-model instance for solver and gradient contracts."""
    rng = rng_for(seed)
    z = scale * rng.normal(size=(n, d))
    theta_true = rng.normal(size=d)
    theta_true /= np.linalg.norm(theta_true)
    x = rng.normal(size=n)
    u = rng.normal(scale=0.3, size=n)
    y = np.sign(x - z @ theta_true + u)
    y[y == 0] = 1.0
    data = Dataset(x=x, y=y, z=z)
    loss = SurrogateLoss(kernel=get_kernel(kernel), bandwidth=delta)
    return SmoothedRiskSpec(data=data, loss=loss,
                            weights=weights or WeightScheme.unit())


@pytest.fixture
def rng():
    return rng_for(1234)
