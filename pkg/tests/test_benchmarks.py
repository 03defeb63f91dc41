import math

import numpy as np
import pytest

from conftest import central_difference, relative_error
from ecdsep.benchmarks import (
    AckleyRegularized,
    FunctionObjective,
    QuadraticBasin,
    SyntheticClassification,
    Zakharov,
    ackley_regularized,
    logistic_objective,
    quadratic_basin,
    zakharov,
)
from ecdsep.core import DimensionError, Objective

ACKLEY_START_VALUE = 10.142532422095204


def _ackley_reference(x, y):
    # written out independently of the library implementation
    return (
        -20.0 * math.exp(-0.2 * math.sqrt(0.5 * (x**2 + y**2)))
        - math.exp(0.5 * (math.cos(2 * math.pi * x) + math.cos(2 * math.pi * y)))
        + math.e
        + 20.0
        + 1e-8 * (x**2 + y**2) ** 4
    )


def test_zakharov_values():
    assert zakharov(np.zeros(5)).value == 0.0
    assert np.array_equal(zakharov(np.zeros(5)).gradient, np.zeros(5))
    assert zakharov(np.ones(2)).value == 9.3125
    assert zakharov(np.ones(10)).value == 572680.3125


def test_ackley_values():
    origin = ackley_regularized(np.zeros(2))
    assert origin.value == pytest.approx(0.0, abs=1e-14)
    assert np.array_equal(origin.gradient, np.zeros(2))
    assert ackley_regularized(np.array([-4.0, 3.0])).value == pytest.approx(ACKLEY_START_VALUE, rel=1e-14)
    assert _ackley_reference(-4.0, 3.0) == pytest.approx(ACKLEY_START_VALUE, rel=1e-14)


def test_ackley_is_two_dimensional():
    with pytest.raises(DimensionError):
        ackley_regularized(np.zeros(3))


def test_quadratic_basin_values():
    assert quadratic_basin(np.zeros(3), 2.0, 1.5).value == 1.5
    ev = quadratic_basin(np.ones(2), f2=0.5, f_min=1.0)
    assert ev.value == 2.0
    assert np.array_equal(ev.gradient, np.ones(2))


@pytest.mark.parametrize(
    "obj, scale",
    [(Zakharov(10), 1.0), (AckleyRegularized(), 5.0), (QuadraticBasin(6, 0.7, 2.0), 3.0)],
    ids=["zakharov", "ackley", "quadratic"],
)
def test_gradients_match_finite_differences(obj, scale):
    gen = np.random.default_rng(11)
    for _ in range(50):
        theta = gen.uniform(-scale, scale, obj.dimension)
        fd = central_difference(lambda t: obj.evaluate(t).value, theta)
        assert relative_error(obj.evaluate(theta).gradient, fd) < 1e-5


def test_logistic_gradient_matches_finite_differences():
    prob = SyntheticClassification(n_features=5, n_samples=200, batch_size=32, seed=4)
    gen = np.random.default_rng(2)
    for k in range(20):
        theta = gen.normal(size=prob.dimension)
        fd = central_difference(lambda t: prob.evaluate(t, k).value, theta)
        assert relative_error(prob.evaluate(theta, k).gradient, fd) < 1e-5


def test_logistic_zero_weights_is_log_two():
    prob = SyntheticClassification()
    for token in (None, 0, 5):
        assert prob.evaluate(np.zeros(prob.dimension), token).value == pytest.approx(math.log(2.0), abs=1e-12)


def test_logistic_batches():
    prob = SyntheticClassification(n_samples=100, batch_size=30)
    assert prob.n_batches == 4
    assert np.array_equal(prob.batch_indices(1), prob.batch_indices(5))
    assert len(prob.batch_indices(3)) == 10
    assert np.array_equal(np.sort(np.concatenate([prob.batch_indices(t) for t in range(4)])), np.arange(100))


def test_objectives_are_pure():
    prob = SyntheticClassification()
    theta = np.linspace(-1, 1, prob.dimension)
    a, b = logistic_objective(prob, theta, 3), logistic_objective(prob, theta, 3)
    assert a.value == b.value and np.array_equal(a.gradient, b.gradient)
    for obj in (Zakharov(4), AckleyRegularized(), QuadraticBasin(2)):
        t = np.full(obj.dimension, 0.3)
        assert obj.evaluate(t).value == obj.evaluate(t).value


def test_dataset_is_reproducible_from_seed():
    a, b = SyntheticClassification(seed=9), SyntheticClassification(seed=9)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.order, b.order)
    assert not np.array_equal(a.x, SyntheticClassification(seed=10).x)


def test_objectives_satisfy_protocol():
    for obj in (Zakharov(3), AckleyRegularized(), QuadraticBasin(2), SyntheticClassification(),
                FunctionObjective(lambda t: (0.0, t), 2)):
        assert isinstance(obj, Objective)


def test_zakharov_has_no_other_stationary_points():
    gen = np.random.default_rng(0)
    pts = gen.normal(scale=2.0, size=(10_000, 6))
    for p in pts:
        assert np.linalg.norm(zakharov(p).gradient) > 0


def test_ackley_increases_along_rays_far_out():
    # the r^8 term only outweighs the cosine ripple beyond r of about 13.3
    gen = np.random.default_rng(1)
    for _ in range(100):
        d = gen.normal(size=2)
        d /= np.linalg.norm(d)
        vals = [ackley_regularized(r * d).value for r in np.linspace(14.0, 30.0, 200)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
