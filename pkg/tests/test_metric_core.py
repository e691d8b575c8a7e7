import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from almostlip.metric_core import (
    SIGMA,
    FiniteMetricSpace,
    MetricError,
    PointSet,
    SlogConstants,
    difference_set,
    kuratowski_embed,
    random_metric_space,
    slog,
    slog_property_audit,
)

positive = st.floats(min_value=1e-12, max_value=1e12, allow_nan=False, allow_infinity=False)
GRID = np.logspace(-9, 9, 2000)


def test_slog_at_one_is_log_two():
    assert slog(1.0) == pytest.approx(math.log(2.0), abs=1e-15)


def test_slog_rejects_nonpositive():
    with pytest.raises(ValueError):
        slog(0.0)
    with pytest.raises(ValueError):
        slog(np.array([1.0, -2.0]))


def test_sigma_value():
    assert SIGMA == 1.0 / (4.0 * math.log(2.0))


@given(positive)
def test_slog_matches_log_of_sum(x):
    # two routes: the stable split form against log(x + 1/x)
    assert slog(x) == pytest.approx(math.log(x + 1.0 / x), rel=1e-12)


@given(positive)
def test_slog_symmetric_and_bounded_below(x):
    assert slog(x) == pytest.approx(slog(1.0 / x), rel=1e-12)
    assert slog(x) >= math.log(2.0) - 1e-15


@given(positive, positive)
def test_slog_monotone_away_from_one(x, y):
    a, b = sorted((max(x, 1.0), max(y, 1.0)))
    assert slog(a) <= slog(b) * (1 + 1e-12)


@pytest.mark.parametrize("prop,params", [("p1", {"L": 4.0}), ("p2", {"L": 4.0, "gamma": 1.5}), ("p3", {"gamma": 2.0}), ("p4", {})])
def test_slog_properties_on_grid(prop, params):
    audit = slog_property_audit(prop, params, GRID)
    assert audit.passed, audit.to_dict()
    assert audit.n_points == len(GRID)


def test_slog_audit_empty_grid_raises():
    with pytest.raises(ValueError):
        slog_property_audit("p1", {"L": 2.0}, [])


def test_slog_constants_positive():
    c = SlogConstants.empirical(3.0, 1.0, GRID)
    assert c.A_L > 0 and c.B_L > 0 and c.a_gamma > 0 and c.b_gamma > 0
    assert c.sigma == SIGMA


def test_metric_validation():
    with pytest.raises(MetricError):
        FiniteMetricSpace(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(MetricError):
        FiniteMetricSpace(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(MetricError):
        FiniteMetricSpace(np.array([[0.0, 0.0], [0.0, 0.0]]))
    bad = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(MetricError):
        FiniteMetricSpace(bad)


def test_single_point_space():
    X = FiniteMetricSpace(np.zeros((1, 1)))
    assert X.n == 1 and X.diam == 0.0


points = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 4)), elements=st.integers(-1000, 1000).map(lambda v: v / 100.0))


@settings(max_examples=60, deadline=None)
@given(points, st.sampled_from(["euclidean", "sup"]))
def test_kuratowski_is_isometric(coords, norm):
    coords = np.unique(coords, axis=0)
    if coords.shape[0] < 2:
        return
    X = PointSet(coords, norm).metric()
    K = kuratowski_embed(X, base_idx=X.n - 1)
    assert K.norm_kind == "sup"
    assert np.abs(K.distances() - X.dist).max() <= 1e-12 * X.diam
    assert np.all(K.coords[X.n - 1] == 0)


def test_kuratowski_bad_base():
    X = random_metric_space(5, seed=0)
    with pytest.raises(IndexError):
        kuratowski_embed(X, 5)


@settings(max_examples=40, deadline=None)
@given(points)
def test_difference_set_structure(coords):
    X = PointSet(coords)
    Z = difference_set(X)
    assert Z.n <= X.n**2
    norms = np.linalg.norm(Z.coords, axis=1)
    assert np.count_nonzero(norms == 0) == 1
    # closed under negation up to the dedup grid
    for z in Z.coords[:10]:
        assert np.min(np.abs(Z.coords + z).max(axis=1)) <= 1e-9 * max(1.0, np.abs(coords).max())


def test_difference_set_single_point():
    Z = difference_set(PointSet(np.array([[3.0, 4.0]])))
    assert Z.n == 1 and np.all(Z.coords == 0)


def test_random_metric_space_deterministic_and_valid():
    A = random_metric_space(32, seed=7)
    B = random_metric_space(32, seed=7)
    assert np.array_equal(A.dist, B.dist)
    D = A.dist
    assert np.all(D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-12)
