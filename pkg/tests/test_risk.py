import numpy as np
import pytest

from smooth_threshold.errors import InputError
from smooth_threshold.kernels import SurrogateLoss, get_kernel
from smooth_threshold.risk import (Dataset, SmoothedRiskSpec, WeightScheme,
                                   class_weights, empirical_gradient,
                                   empirical_risk, objective, zero_one_risk)

from conftest import random_spec

# Hand-checked three-sample instance (margins 0.3, -2.0, 0.1); oracle values
# computed independently with scipy before this module was written.
X3 = np.array([0.3, -0.2, 1.1])
Y3 = np.array([1.0, -1.0, 1.0])
Z3 = np.array([[1.0, 0.5], [-0.4, 2.0], [0.0, -1.0]])
TH3 = np.array([0.5, -1.0])

RECT_D2_RISK = 0.6333333333333333
RECT_D2_GRAD = [0.11666666666666665, -0.20833333333333334]
GAUSS_D1_RISK = 0.6065035361952796
GAUSS_D1_GRAD = [0.13432806735526645, -0.10474685759104196]
PHI0 = 0.3989422804014327


def spec3(kernel, delta):
    data = Dataset(x=X3, y=Y3, z=Z3)
    return SmoothedRiskSpec(data=data,
                            loss=SurrogateLoss(kernel=get_kernel(kernel),
                                               bandwidth=delta))


def test_frozen_rectangular_risk_and_gradient():
    spec = spec3("rectangular", 2.0)
    assert empirical_risk(spec, TH3) == pytest.approx(RECT_D2_RISK, rel=1e-14)
    assert empirical_gradient(spec, TH3) == pytest.approx(RECT_D2_GRAD, rel=1e-14)


def test_frozen_gaussian_risk_and_gradient():
    spec = spec3("gaussian", 1.0)
    assert empirical_risk(spec, TH3) == pytest.approx(GAUSS_D1_RISK, rel=1e-13)
    assert empirical_gradient(spec, TH3) == pytest.approx(GAUSS_D1_GRAD, rel=1e-13)


def test_single_sample_at_zero():
    data = Dataset(x=[0.0], y=[1.0], z=[[1.0]])
    spec = SmoothedRiskSpec(data=data,
                            loss=SurrogateLoss(kernel=get_kernel("gaussian"),
                                               bandwidth=1.0))
    theta = np.zeros(1)
    assert empirical_risk(spec, theta) == pytest.approx(0.5, abs=1e-15)
    assert empirical_gradient(spec, theta) == pytest.approx([PHI0], rel=1e-14)


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset(x=[1.0, 2.0], y=[1.0], z=[[1.0], [2.0]])
    with pytest.raises(InputError):
        Dataset(x=[1.0], y=[1.0], z=[1.0])  # z must be 2-d
    with pytest.raises(InputError):
        Dataset(x=[np.nan], y=[1.0], z=[[1.0]])
    with pytest.raises(InputError) as err:
        Dataset(x=[1.0, 2.0], y=[1.0, 0.5], z=[[1.0], [2.0]])
    assert "1" in str(err.value)  # offending row index is reported
    with pytest.raises(InputError):
        Dataset(x=[], y=[], z=np.zeros((0, 2)))


def test_dataset_is_immutable():
    data = Dataset(x=[1.0], y=[1.0], z=[[1.0, 2.0]])
    assert data.n == 1 and data.d == 2
    with pytest.raises(ValueError):
        data.z[0, 0] = 5.0


def test_class_weights_balanced_and_imbalanced():
    data = Dataset(x=np.zeros(4), y=[1.0, -1.0, 1.0, -1.0], z=np.ones((4, 1)))
    scheme = class_weights(data)
    assert scheme.class_weights == (2.0, 2.0)
    assert scheme.resolve(data) == pytest.approx(np.full(4, 2.0))

    data5 = Dataset(x=np.zeros(5), y=[1.0, 1.0, -1.0, -1.0, -1.0],
                    z=np.ones((5, 1)))
    scheme5 = class_weights(data5)
    assert scheme5.class_weights == pytest.approx((2.5, 5 / 3))

    one_class = Dataset(x=np.zeros(3), y=[1.0, 1.0, 1.0], z=np.ones((3, 1)))
    with pytest.raises(InputError) as err:
        class_weights(one_class)
    assert "-1" in str(err.value)


def test_weight_scheme_validation():
    with pytest.raises(InputError):
        WeightScheme(kind="bogus")
    with pytest.raises(InputError):
        WeightScheme.samples([-0.5, 1.0])
    with pytest.raises(InputError):
        WeightScheme(kind="per_sample")
    data = Dataset(x=[0.0, 0.0], y=[1.0, -1.0], z=np.ones((2, 1)))
    with pytest.raises(InputError):
        WeightScheme.samples([1.0, 2.0, 3.0]).resolve(data)


def test_weight_doubling_scales_risk_and_gradient_exactly():
    base = random_spec(n=60, d=4, seed=7)
    w = np.abs(np.random.Generator(np.random.Philox(key=11)).normal(
        size=60)) + 0.1
    spec1 = SmoothedRiskSpec(data=base.data, loss=base.loss,
                             weights=WeightScheme.samples(w))
    spec2 = SmoothedRiskSpec(data=base.data, loss=base.loss,
                             weights=WeightScheme.samples(2.0 * w))
    theta = np.array([0.2, -0.1, 0.4, 0.0])
    # doubling is a power of two, so the scaling is exact in floating point
    assert empirical_risk(spec2, theta) == 2.0 * empirical_risk(spec1, theta)
    assert np.array_equal(empirical_gradient(spec2, theta),
                          2.0 * empirical_gradient(spec1, theta))


def test_translation_identity_with_intercept_column():
    spec = random_spec(n=50, d=3, seed=3)
    data = spec.data
    ones = np.ones((data.n, 1))
    z_aug = np.hstack([ones, data.z])
    theta = np.array([0.3, 0.1, -0.2, 0.5])
    shift = 1.25
    base = Dataset(x=data.x, y=data.y, z=z_aug)
    moved = Dataset(x=data.x + shift, y=data.y, z=z_aug)
    spec_base = SmoothedRiskSpec(data=base, loss=spec.loss)
    spec_moved = SmoothedRiskSpec(data=moved, loss=spec.loss)
    theta_moved = theta.copy()
    theta_moved[0] += shift
    assert empirical_risk(spec_moved, theta_moved) == pytest.approx(
        empirical_risk(spec_base, theta), rel=1e-12)
    assert empirical_gradient(spec_moved, theta_moved) == pytest.approx(
        empirical_gradient(spec_base, theta), abs=1e-12)


def test_zero_one_risk_margins_and_ties():
    data = Dataset(x=[1.0, 1.0], y=[1.0, -1.0], z=np.zeros((2, 1)))
    # margins +1 and -1
    assert zero_one_risk(data, np.zeros(1)) == 0.5
    # an exact tie contributes one half
    tie = Dataset(x=[2.0], y=[1.0], z=[[1.0]])
    assert zero_one_risk(tie, np.array([2.0])) == 0.5
    assert zero_one_risk(tie, np.array([1.0])) == 0.0
    assert zero_one_risk(tie, np.array([3.0])) == 1.0


def test_zero_one_risk_weighted():
    data = Dataset(x=[1.0, -1.0, 5.0], y=[1.0, -1.0, 1.0], z=np.zeros((3, 1)))
    w = WeightScheme.samples([3.0, 1.0, 1.0])
    # margins 1, 1, 5: no errors
    assert zero_one_risk(data, np.zeros(1), w) == 0.0
    flipped = Dataset(x=[-1.0, 1.0, 5.0], y=[1.0, -1.0, 1.0], z=np.zeros((3, 1)))
    # first two samples are misclassified, weights 3 and 1
    assert zero_one_risk(flipped, np.zeros(1), w) == pytest.approx(4 / 3)


def test_objective_adds_scaled_l1():
    spec = spec3("gaussian", 1.0)
    val = objective(spec, TH3, 0.25)
    assert val == pytest.approx(GAUSS_D1_RISK + 0.25 * 1.5, rel=1e-13)
    with pytest.raises(InputError):
        objective(spec, TH3, -0.1)


def test_theta_validation():
    spec = spec3("gaussian", 1.0)
    with pytest.raises(InputError):
        empirical_risk(spec, np.zeros(3))
    with pytest.raises(InputError):
        empirical_gradient(spec, np.array([np.inf, 0.0]))


@pytest.mark.parametrize("kernel,delta", [("gaussian", 1.0), ("gaussian", 0.3),
                                          ("gaussian-order-2", 0.7),
                                          ("epanechnikov", 2.5)])
def test_gradient_matches_central_differences(kernel, delta):
    spec = random_spec(n=35, d=4, seed=21, kernel=kernel, delta=delta)
    rng = np.random.Generator(np.random.Philox(key=5))
    theta = 0.5 * rng.normal(size=4)
    g = empirical_gradient(spec, theta)
    fd = np.empty_like(g)
    for j in range(4):
        h = 1e-5 * (1.0 + abs(theta[j]))
        e = np.zeros(4)
        e[j] = h
        fd[j] = (empirical_risk(spec, theta + e)
                 - empirical_risk(spec, theta - e)) / (2 * h)
    assert g == pytest.approx(fd, abs=2e-8)


def test_risk_nonnegative_and_bounded_for_unit_weights():
    spec = random_spec(n=80, d=5, seed=9)
    rng = np.random.Generator(np.random.Philox(key=17))
    for _ in range(5):
        theta = rng.normal(size=5)
        r = empirical_risk(spec, theta)
        assert 0.0 <= r <= 1.0


def test_determinism_bitwise():
    spec = random_spec(n=300, d=6, seed=2)
    theta = np.full(6, 0.1)
    g1 = empirical_gradient(spec, theta)
    g2 = empirical_gradient(spec, theta)
    assert np.array_equal(g1, g2)
    assert empirical_risk(spec, theta) == empirical_risk(spec, theta)
